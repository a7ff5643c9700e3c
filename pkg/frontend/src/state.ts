/**
 * Draft scenario state: the feature vector being explored, per-feature
 * actionability overrides, and solve settings. Drafts live entirely on the
 * client; a draft serializes exactly to the /v1/flipset request body, and the
 * permalink encodes that body as base64 JSON so any result panel can be
 * reproduced from its URL.
 */

import {
    Actionability,
    CostVariant,
    FeatureMeta,
    FlipsetRequest,
    OverrideEdit,
} from "./types.js";

export interface DraftScenario {
    values: Record<string, number>;
    overrides: Record<string, OverrideEdit>;
    costVariant: CostVariant;
    items: number;
    margin: number;
}

export interface FieldError {
    field: string;
    message: string;
}

export const MAX_ITEMS = 100;

export function emptyDraft(meta: { actions: FeatureMeta[] }): DraftScenario {
    const values: Record<string, number> = {};
    for (const f of meta.actions) {
        values[f.name] = f.kind === "real" ? f.lb : Math.round(f.lb);
    }
    return { values, overrides: {}, costVariant: "total_log_pct", items: 5, margin: 0 };
}

function effectiveBounds(f: FeatureMeta, edit: OverrideEdit | undefined): [number, number] {
    return [edit?.lb ?? f.lb, edit?.ub ?? f.ub];
}

/**
 * Client-side validation mirroring the service's field rules: integer
 * features reject fractions, binary features are 0/1 switches, values must
 * sit inside the (possibly overridden) bounds.
 */
export function validateDraft(draft: DraftScenario, actions: FeatureMeta[]): FieldError[] {
    const errors: FieldError[] = [];
    for (const f of actions) {
        const v = draft.values[f.name];
        const field = `x.${f.name}`;
        if (v === undefined || Number.isNaN(v) || !Number.isFinite(v)) {
            errors.push({ field, message: `enter a value for ${f.name}` });
            continue;
        }
        if ((f.kind === "integer" || f.kind === "binary") && !Number.isInteger(v)) {
            errors.push({ field, message: `${f.name} must be a whole number` });
            continue;
        }
        if (f.kind === "binary" && v !== 0 && v !== 1) {
            errors.push({ field, message: `${f.name} is a yes/no switch` });
            continue;
        }
        const edit = draft.overrides[f.name];
        const [lb, ub] = effectiveBounds(f, edit);
        if (v < lb || v > ub) {
            errors.push({ field, message: `${f.name} must be between ${lb} and ${ub}` });
        }
    }
    for (const [name, edit] of Object.entries(draft.overrides)) {
        const meta = actions.find((f) => f.name === name);
        if (!meta) {
            errors.push({ field: "overrides", message: `unknown feature ${name}` });
            continue;
        }
        const [lb, ub] = effectiveBounds(meta, edit);
        if (lb > ub) {
            errors.push({
                field: `overrides.${name}`,
                message: `lower bound ${lb} exceeds upper bound ${ub}`,
            });
        }
    }
    if (!Number.isInteger(draft.items) || draft.items < 1 || draft.items > MAX_ITEMS) {
        errors.push({ field: "T", message: `item count must be 1..${MAX_ITEMS}` });
    }
    if (!(draft.margin >= 0) || !Number.isFinite(draft.margin)) {
        errors.push({ field: "margin", message: "margin must be a nonnegative number" });
    }
    return errors;
}

/** Serialize a draft to the exact /v1/flipset request schema. */
export function toFlipsetRequest(draft: DraftScenario): FlipsetRequest {
    const body: FlipsetRequest = {
        x: { ...draft.values },
        cost_variant: draft.costVariant,
        T: draft.items,
        margin: draft.margin,
    };
    const names = Object.keys(draft.overrides).sort();
    if (names.length > 0) {
        const overrides: Record<string, OverrideEdit> = {};
        for (const name of names) {
            overrides[name] = { ...draft.overrides[name] };
        }
        body.overrides = overrides;
    }
    return body;
}

export function draftFromRequest(body: FlipsetRequest): DraftScenario {
    return {
        values: { ...body.x },
        overrides: body.overrides
            ? Object.fromEntries(
                  Object.entries(body.overrides).map(([k, v]) => [k, { ...v }])
              )
            : {},
        costVariant: body.cost_variant,
        items: body.T,
        margin: body.margin,
    };
}

/** Toggle helpers used by the form controls. */
export function setOverride(
    draft: DraftScenario,
    feature: string,
    edit: OverrideEdit | null
): DraftScenario {
    const overrides = { ...draft.overrides };
    if (edit === null || Object.keys(edit).length === 0) {
        delete overrides[feature];
    } else {
        overrides[feature] = { ...edit };
    }
    return { ...draft, overrides };
}

export function setActionabilityOverride(
    draft: DraftScenario,
    feature: string,
    actionability: Actionability | null
): DraftScenario {
    const current = { ...(draft.overrides[feature] ?? {}) };
    if (actionability === null) {
        delete current.actionability;
    } else {
        current.actionability = actionability;
    }
    return setOverride(draft, feature, current);
}

// --- permalinks --------------------------------------------------------------

function toBase64(text: string): string {
    if (typeof btoa === "function") {
        return btoa(unescape(encodeURIComponent(text)));
    }
    return Buffer.from(text, "utf-8").toString("base64");
}

function fromBase64(encoded: string): string {
    if (typeof atob === "function") {
        return decodeURIComponent(escape(atob(encoded)));
    }
    return Buffer.from(encoded, "base64").toString("utf-8");
}

/** Encode the full request body so the panel is reproducible from the URL. */
export function encodePermalink(body: FlipsetRequest): string {
    return toBase64(JSON.stringify(body));
}

export function decodePermalink(encoded: string): FlipsetRequest | null {
    try {
        const parsed = JSON.parse(fromBase64(encoded));
        if (typeof parsed !== "object" || parsed === null) return null;
        if (typeof parsed.x !== "object" || parsed.x === null) return null;
        return parsed as FlipsetRequest;
    } catch {
        return null;
    }
}
