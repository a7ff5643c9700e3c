/**
 * Pure presentation model for a result panel. Every number in the model is
 * copied from a service response; the presenter only arranges and formats.
 * Re-presenting the same response yields an identical model, which is what
 * makes panels reproducible from their permalinks.
 */

import { CostVariant, FlipsetResponse } from "./types.js";

export interface ChangeRow {
    feature: string;
    current: number;
    required: number;
}

export interface PanelItem {
    rows: ChangeRow[];
    cost: number;
    costText: string;
    percentileSentence: string | null;
}

export interface ResultPanel {
    kind: "flipset" | "no_recourse";
    score: number;
    label: -1 | 1;
    /** Score squashed to (0, 1) for the gauge needle. */
    gaugeFraction: number;
    items: PanelItem[];
    exhausted: boolean;
    caveat: string;
    permalink: string;
}

export function formatValue(v: number): string {
    if (Number.isInteger(v)) return String(v);
    const rounded = Number(v.toPrecision(6));
    return String(rounded);
}

export function formatCost(cost: number): string {
    return Number.isInteger(cost) ? String(cost) : String(Number(cost.toPrecision(6)));
}

/**
 * The max-percentile-shift optimum certifies a per-feature floor: no flipping
 * action moves every feature by fewer percentiles than the optimum. Other
 * variants carry no such per-feature reading, so they show the raw cost only.
 */
export function percentileSentence(variant: CostVariant, cost: number): string | null {
    if (variant !== "max_pct") return null;
    const pct = Math.round(cost * 100);
    return `Any action that flips this prediction must move some feature by at least ${pct} percentile${pct === 1 ? "" : "s"}.`;
}

export function presentResult(
    response: FlipsetResponse,
    variant: CostVariant,
    permalink: string
): ResultPanel {
    const items: PanelItem[] = response.items.map((item) => ({
        rows: item.changes.map((c) => ({
            feature: c.feature,
            current: c.current,
            required: c.required,
        })),
        cost: item.cost,
        costText: formatCost(item.cost),
        percentileSentence: percentileSentence(variant, item.cost),
    }));
    return {
        kind: items.length === 0 && response.exhausted ? "no_recourse" : "flipset",
        score: response.prediction.score,
        label: response.prediction.label,
        gaugeFraction: 1 / (1 + Math.exp(-response.prediction.score)),
        items,
        exhausted: response.exhausted,
        caveat: response.caveat,
        permalink,
    };
}
