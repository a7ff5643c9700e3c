/** Browser wiring: builds the form from model metadata and drives the panel. */

import { RecourseClient } from "./api.js";
import { ExplorerController } from "./controller.js";
import { renderFieldErrors, renderResultPanel, escapeHtml } from "./render.js";
import {
    DraftScenario,
    decodePermalink,
    draftFromRequest,
    emptyDraft,
    validateDraft,
} from "./state.js";
import {
    Actionability,
    CostVariant,
    FeatureMeta,
    ModelMetadata,
    OverrideEdit,
} from "./types.js";

const ACTIONABILITY_CHOICES: Actionability[] = [
    "any",
    "fixed",
    "increase_only",
    "decrease_only",
];
const COST_CHOICES: CostVariant[] = ["total_log_pct", "max_pct", "linear"];

async function boot(): Promise<void> {
    const root = document.getElementById("app");
    if (!root) return;
    const client = new RecourseClient("");
    const controller = new ExplorerController(client);
    let meta: ModelMetadata;
    try {
        meta = await client.modelMetadata();
    } catch (err) {
        root.innerHTML = `<p class="error">service unreachable: ${escapeHtml(String(err))}</p>`;
        return;
    }

    let draft = emptyDraft(meta);
    const fromHash = window.location.hash.slice(1);
    if (fromHash) {
        const body = decodePermalink(decodeURIComponent(fromHash));
        if (body) {
            draft = draftFromRequest(body);
        }
    }

    root.innerHTML = `
      <form id="draft-form">
        <div id="features"></div>
        <fieldset class="settings">
          <label>cost
            <select name="cost">${COST_CHOICES.map(
                (c) => `<option value="${c}">${c}</option>`
            ).join("")}</select>
          </label>
          <label>items <input name="items" type="number" min="1" max="100" step="1"></label>
          <label>margin <input name="margin" type="number" min="0" step="0.01"></label>
          <button type="submit">Explore</button>
        </fieldset>
      </form>
      <div id="panel"></div>`;

    const featureBox = root.querySelector("#features") as HTMLElement;
    featureBox.innerHTML = meta.actions.map(featureRow).join("\n");

    const form = root.querySelector("#draft-form") as HTMLFormElement;
    const panel = root.querySelector("#panel") as HTMLElement;
    syncForm(form, draft, meta);

    form.addEventListener("submit", (event) => {
        event.preventDefault();
        draft = readDraft(form, meta);
        clearFieldErrors(form);
        const errors = validateDraft(draft, meta.actions);
        if (errors.length > 0) {
            showFieldErrors(form, renderFieldErrors(errors));
            return;
        }
        panel.innerHTML = `<p class="note">solving&hellip;</p>`;
        void controller.submit(draft).then((outcome) => {
            if (outcome.kind === "stale") return;
            if (outcome.kind === "error") {
                if (outcome.field) {
                    showFieldErrors(form, { [outcome.field]: outcome.message });
                    panel.innerHTML = "";
                } else {
                    panel.innerHTML = `<p class="error">${escapeHtml(outcome.message)}</p>`;
                }
                return;
            }
            panel.innerHTML = renderResultPanel(outcome.panel);
            window.location.hash = encodeURIComponent(outcome.panel.permalink);
        });
    });
}

function featureRow(f: FeatureMeta): string {
    const input =
        f.kind === "binary"
            ? `<input type="checkbox" data-feature="${f.name}" class="value">`
            : `<input type="number" data-feature="${f.name}" class="value" ` +
              `step="${f.kind === "integer" ? 1 : "any"}" min="${f.lb}" max="${f.ub}">`;
    const toggles = ACTIONABILITY_CHOICES.map(
        (a) => `<option value="${a}">${a.replace("_", " ")}</option>`
    ).join("");
    const boundEdits =
        f.kind === "binary"
            ? ""
            : `<span class="bounds">bounds
                 <input type="number" class="lb" data-feature="${f.name}" step="any" placeholder="${f.lb}">
                 ..
                 <input type="number" class="ub" data-feature="${f.name}" step="any" placeholder="${f.ub}">
               </span>`;
    return `
      <div class="feature" data-feature="${f.name}">
        <label>${escapeHtml(f.name)} <span class="kind">(${f.kind}, ${f.lb}..${f.ub})</span>
          ${input}
        </label>
        <select class="actionability" data-feature="${f.name}">${toggles}</select>
        ${boundEdits}
        <span class="field-error" data-field="x.${f.name}"></span>
        <span class="field-error" data-field="overrides.${f.name}"></span>
      </div>`;
}

function syncForm(form: HTMLFormElement, draft: DraftScenario, meta: ModelMetadata): void {
    for (const f of meta.actions) {
        const input = form.querySelector(
            `.value[data-feature="${f.name}"]`
        ) as HTMLInputElement | null;
        if (!input) continue;
        if (f.kind === "binary") {
            input.checked = draft.values[f.name] === 1;
        } else {
            input.value = String(draft.values[f.name] ?? f.lb);
        }
        const select = form.querySelector(
            `.actionability[data-feature="${f.name}"]`
        ) as HTMLSelectElement | null;
        if (select) {
            select.value = draft.overrides[f.name]?.actionability ?? f.actionability;
        }
        const lb = form.querySelector(
            `.lb[data-feature="${f.name}"]`
        ) as HTMLInputElement | null;
        const ub = form.querySelector(
            `.ub[data-feature="${f.name}"]`
        ) as HTMLInputElement | null;
        if (lb) lb.value = draft.overrides[f.name]?.lb?.toString() ?? "";
        if (ub) ub.value = draft.overrides[f.name]?.ub?.toString() ?? "";
    }
    (form.elements.namedItem("cost") as HTMLSelectElement).value = draft.costVariant;
    (form.elements.namedItem("items") as HTMLInputElement).value = String(draft.items);
    (form.elements.namedItem("margin") as HTMLInputElement).value = String(draft.margin);
}

function readDraft(form: HTMLFormElement, meta: ModelMetadata): DraftScenario {
    const values: Record<string, number> = {};
    const overrides: DraftScenario["overrides"] = {};
    for (const f of meta.actions) {
        const input = form.querySelector(
            `.value[data-feature="${f.name}"]`
        ) as HTMLInputElement;
        values[f.name] = f.kind === "binary" ? (input.checked ? 1 : 0) : Number(input.value);
        const select = form.querySelector(
            `.actionability[data-feature="${f.name}"]`
        ) as HTMLSelectElement;
        const edit: OverrideEdit = {};
        if (select.value !== f.actionability) {
            edit.actionability = select.value as Actionability;
        }
        const lb = form.querySelector(
            `.lb[data-feature="${f.name}"]`
        ) as HTMLInputElement | null;
        const ub = form.querySelector(
            `.ub[data-feature="${f.name}"]`
        ) as HTMLInputElement | null;
        if (lb && lb.value !== "") edit.lb = Number(lb.value);
        if (ub && ub.value !== "") edit.ub = Number(ub.value);
        if (Object.keys(edit).length > 0) {
            overrides[f.name] = edit;
        }
    }
    return {
        values,
        overrides,
        costVariant: (form.elements.namedItem("cost") as HTMLSelectElement)
            .value as CostVariant,
        items: Number((form.elements.namedItem("items") as HTMLInputElement).value),
        margin: Number((form.elements.namedItem("margin") as HTMLInputElement).value),
    };
}

function clearFieldErrors(form: HTMLFormElement): void {
    form.querySelectorAll(".field-error").forEach((el) => {
        el.textContent = "";
    });
}

function showFieldErrors(form: HTMLFormElement, byField: Record<string, string>): void {
    for (const [field, message] of Object.entries(byField)) {
        const slot = form.querySelector(`.field-error[data-field="${field}"]`);
        if (slot) {
            slot.textContent = message;
        }
    }
}

boot();
