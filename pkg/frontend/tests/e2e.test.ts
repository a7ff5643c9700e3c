/**
 * End-to-end checks against the real service and CLI: the rendered flipset
 * items must equal the CLI's output for identical inputs, the all-fixed
 * override must certify denial, and relaxing a bound must keep previously
 * shown items valid.
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { RecourseClient } from "../src/api.js";
import { ExplorerController } from "../src/controller.js";
import {
    DraftScenario,
    decodePermalink,
    draftFromRequest,
    encodePermalink,
    toFlipsetRequest,
} from "../src/state.js";
import { Actionability, CostVariant, FlipsetItemPayload } from "../src/types.js";

const PYTHON = process.env.PYTHON ?? "python3";
const REPO_ROOT = join(__dirname, "..", "..");
const PORT = 18000 + (process.pid % 2000);
const BASE_URL = `http://127.0.0.1:${PORT}`;

interface ActionDoc {
    name: string;
    kind: string;
    lb: number;
    ub: number;
    actionability: string;
    grid_size?: number;
}

const MODEL = {
    intercept: -6.0,
    coefficients: {
        income: 0.8,
        debt: -0.7,
        cards: -0.3,
        has_acct: 0.9,
        edu: 0.5,
        age: 0.01,
    },
};

const ACTIONS: ActionDoc[] = [
    { name: "income", kind: "real", lb: 0, ub: 10, actionability: "any", grid_size: 12 },
    { name: "debt", kind: "real", lb: 0, ub: 8, actionability: "decrease_only", grid_size: 10 },
    { name: "cards", kind: "integer", lb: 0, ub: 6, actionability: "any" },
    { name: "has_acct", kind: "binary", lb: 0, ub: 1, actionability: "any" },
    { name: "edu", kind: "integer", lb: 0, ub: 3, actionability: "increase_only" },
    { name: "age", kind: "integer", lb: 18, ub: 80, actionability: "fixed" },
];

// deterministic small-state rng for reproducible drafts
function lcg(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (state * 1664525 + 1013904223) >>> 0;
        return state / 2 ** 32;
    };
}

let workdir: string;
let server: ChildProcess | null = null;
let client: RecourseClient;

async function waitForService(): Promise<void> {
    const deadline = Date.now() + 30_000;
    while (Date.now() < deadline) {
        try {
            const out = await fetch(`${BASE_URL}/v1/model`);
            if (out.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((r) => setTimeout(r, 200));
    }
    throw new Error("service did not become ready");
}

beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "recourse-e2e-"));
    writeFileSync(join(workdir, "model.json"), JSON.stringify(MODEL));
    writeFileSync(join(workdir, "actions.json"), JSON.stringify(ACTIONS));

    const rand = lcg(20240817);
    const rows = ["income,debt,cards,has_acct,edu,age"];
    for (let i = 0; i < 60; i++) {
        const income = (rand() * 10).toFixed(3);
        const debt = (rand() * 8).toFixed(3);
        const cards = Math.floor(rand() * 7);
        const acct = rand() < 0.5 ? 0 : 1;
        const edu = Math.floor(rand() * 4);
        const age = 18 + Math.floor(rand() * 63);
        rows.push(`${income},${debt},${cards},${acct},${edu},${age}`);
    }
    writeFileSync(join(workdir, "data.csv"), rows.join("\n") + "\n");

    server = spawn(
        PYTHON,
        [
            "-m", "recoursekit.cli", "serve",
            "--model", join(workdir, "model.json"),
            "--actions", join(workdir, "actions.json"),
            "--data", join(workdir, "data.csv"),
            "--port", String(PORT),
        ],
        { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] }
    );
    await waitForService();
    client = new RecourseClient(BASE_URL);
});

afterAll(() => {
    if (server) server.kill("SIGTERM");
    rmSync(workdir, { recursive: true, force: true });
});

function sampleValue(rand: () => number, action: ActionDoc): number {
    if (action.kind === "real") {
        return Number((action.lb + rand() * (action.ub - action.lb)).toFixed(3));
    }
    return action.lb + Math.floor(rand() * (action.ub - action.lb + 1));
}

async function sampleDeniedDraft(rand: () => number): Promise<DraftScenario> {
    for (let attempt = 0; attempt < 200; attempt++) {
        const values: Record<string, number> = {};
        for (const a of ACTIONS) values[a.name] = sampleValue(rand, a);
        const prediction = await client.predict(values);
        if (prediction.label === -1) {
            const variants: CostVariant[] = ["total_log_pct", "max_pct", "linear"];
            const overrides: DraftScenario["overrides"] = {};
            for (const a of ACTIONS) {
                if (rand() < 0.3) {
                    const pool: Actionability[] = ["any", "fixed", "increase_only", "decrease_only"];
                    overrides[a.name] = { actionability: pool[Math.floor(rand() * pool.length)] };
                }
            }
            return {
                values,
                overrides,
                costVariant: variants[Math.floor(rand() * variants.length)],
                items: 1 + Math.floor(rand() * 5),
                margin: rand() < 0.25 ? 0.2 : 0,
            };
        }
    }
    throw new Error("could not sample a denied point");
}

function cliFlipset(draft: DraftScenario, tag: string): { items: FlipsetItemPayload[]; exhausted: boolean } {
    const merged = ACTIONS.map((a) => {
        const edit = draft.overrides[a.name];
        return edit ? { ...a, ...edit } : a;
    });
    const actionsPath = join(workdir, `actions-${tag}.json`);
    const pointPath = join(workdir, `point-${tag}.json`);
    const outPrefix = join(workdir, `out-${tag}`);
    writeFileSync(actionsPath, JSON.stringify(merged));
    writeFileSync(pointPath, JSON.stringify(draft.values));
    const result = spawnSync(
        PYTHON,
        [
            "-m", "recoursekit.cli", "flipset",
            "--model", join(workdir, "model.json"),
            "--actions", actionsPath,
            "--point", pointPath,
            "--cost", draft.costVariant,
            "--percentile-data", join(workdir, "data.csv"),
            "--items", String(draft.items),
            "--margin", String(draft.margin),
            "--out", outPrefix,
        ],
        { cwd: REPO_ROOT, encoding: "utf-8" }
    );
    expect(result.status, result.stderr).toBe(0);
    return JSON.parse(readFileSync(`${outPrefix}.json`, "utf-8"));
}

describe("explorer against the live service", () => {
    it("renders exactly the CLI's flipset items for 25 randomized drafts", async () => {
        const rand = lcg(424242);
        const controller = new ExplorerController(client);
        for (let i = 0; i < 25; i++) {
            const draft = await sampleDeniedDraft(rand);
            const outcome = await controller.submit(draft);
            expect(outcome.kind).toBe("panel");
            if (outcome.kind !== "panel") continue;
            const expected = cliFlipset(draft, String(i));
            const rendered = outcome.panel.items.map((item) => ({
                changes: item.rows.map((r) => ({
                    feature: r.feature,
                    current: r.current,
                    required: r.required,
                })),
                cost: item.cost,
            }));
            expect(rendered).toEqual(expected.items);
            expect(outcome.panel.exhausted).toBe(expected.exhausted);
        }
    }, 180_000);

    it("shows the certified banner when every feature is fixed", async () => {
        const rand = lcg(777);
        const draft = await sampleDeniedDraft(rand);
        draft.overrides = Object.fromEntries(
            ACTIONS.map((a) => [a.name, { actionability: "fixed" as Actionability }])
        );
        const controller = new ExplorerController(client);
        const outcome = await controller.submit(draft);
        expect(outcome.kind).toBe("panel");
        if (outcome.kind === "panel") {
            expect(outcome.panel.kind).toBe("no_recourse");
            expect(outcome.panel.items).toEqual([]);
            expect(outcome.panel.exhausted).toBe(true);
        }
    });

    it("keeps previously shown items valid when a bound is widened", async () => {
        // start income-capped, then relax the cap: the feasible set only
        // grows, so every previously rendered item must still flip
        const draft: DraftScenario = {
            values: { income: 2, debt: 4, cards: 3, has_acct: 0, edu: 1, age: 30 },
            overrides: { income: { ub: 4 } },
            costVariant: "linear",
            items: 4,
            margin: 0,
        };
        const before = await client.predict(draft.values);
        expect(before.label).toBe(-1);
        const controller = new ExplorerController(client);
        const narrow = await controller.submit(draft);
        expect(narrow.kind).toBe("panel");
        if (narrow.kind !== "panel") return;

        const widened = { ...draft, overrides: { income: { ub: 10 } } };
        const wide = await controller.submit(widened);
        expect(wide.kind).toBe("panel");

        for (const item of narrow.panel.items) {
            const moved = { ...draft.values };
            for (const row of item.rows) moved[row.feature] = row.required;
            const prediction = await client.predict(moved);
            expect(prediction.label).toBe(1);
        }
    });

    it("loads a certified-denial preset from its permalink", async () => {
        // a shared scenario is just a permalink: decode it, submit it, and the
        // panel reproduces the denial with the certified banner
        const preset: DraftScenario = {
            values: { income: 1, debt: 6, cards: 5, has_acct: 0, edu: 0, age: 40 },
            overrides: Object.fromEntries(
                ACTIONS.map((a) => [a.name, { actionability: "fixed" as Actionability }])
            ),
            costVariant: "linear",
            items: 3,
            margin: 0,
        };
        const encoded = encodePermalink(toFlipsetRequest(preset));
        const decoded = decodePermalink(encoded);
        expect(decoded).not.toBeNull();
        const restored = draftFromRequest(decoded!);
        const controller = new ExplorerController(client);
        const outcome = await controller.submit(restored);
        expect(outcome.kind).toBe("panel");
        if (outcome.kind === "panel") {
            expect(outcome.panel.label).toBe(-1);
            expect(outcome.panel.kind).toBe("no_recourse");
        }
    });

    it("renders an identical panel when an unchanged draft is resubmitted", async () => {
        const draft: DraftScenario = {
            values: { income: 2, debt: 4, cards: 3, has_acct: 0, edu: 1, age: 30 },
            overrides: {},
            costVariant: "max_pct",
            items: 3,
            margin: 0,
        };
        const controller = new ExplorerController(client);
        const first = await controller.submit(draft);
        const second = await controller.submit(draft);
        expect(first.kind).toBe("panel");
        expect(second.kind).toBe("panel");
        if (first.kind === "panel" && second.kind === "panel") {
            expect(second.panel).toEqual(first.panel);
        }
    });

    it("rejects an already-approved point with a 422", async () => {
        const values = { income: 10, debt: 0, cards: 0, has_acct: 1, edu: 3, age: 80 };
        const prediction = await client.predict(values);
        expect(prediction.label).toBe(1);
        const controller = new ExplorerController(client);
        const outcome = await controller.submit({
            values,
            overrides: {},
            costVariant: "linear",
            items: 2,
            margin: 0,
        });
        expect(outcome.kind).toBe("error");
    });
});
