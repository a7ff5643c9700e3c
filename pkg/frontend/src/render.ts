/** HTML renderers for the result panel and inline field errors. */

import { ResultPanel, formatValue } from "./presenter.js";
import { FieldError } from "./state.js";

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;")
        .replace(/'/g, "&#39;");
}

export function renderScoreGauge(panel: ResultPanel): string {
    const pct = (panel.gaugeFraction * 100).toFixed(1);
    const badge = panel.label === 1 ? "approved" : "denied";
    return [
        `<div class="gauge" data-label="${panel.label}">`,
        `  <div class="gauge-bar"><div class="gauge-fill" style="width:${pct}%"></div></div>`,
        `  <span class="gauge-score">score ${escapeHtml(formatValue(panel.score))}</span>`,
        `  <span class="gauge-badge gauge-${badge}">${badge}</span>`,
        `</div>`,
    ].join("\n");
}

export function renderResultPanel(panel: ResultPanel): string {
    const parts = [renderScoreGauge(panel)];
    if (panel.kind === "no_recourse") {
        parts.push(
            `<div class="banner banner-no-recourse">No recourse under these constraints ` +
                `(certified: no feasible change flips this prediction).</div>`
        );
    } else {
        parts.push(`<table class="flipset"><thead><tr>` +
            `<th>Features to Change</th><th>Current Values</th><th></th>` +
            `<th>Required Values</th><th>Cost</th></tr></thead><tbody>`);
        panel.items.forEach((item, i) => {
            item.rows.forEach((row, r) => {
                const costCell =
                    r === 0
                        ? `<td class="cost" rowspan="${item.rows.length}">${escapeHtml(item.costText)}</td>`
                        : "";
                parts.push(
                    `<tr class="item-${i}${r === 0 ? " item-start" : ""}">` +
                        `<td>${escapeHtml(row.feature)}</td>` +
                        `<td>${escapeHtml(formatValue(row.current))}</td>` +
                        `<td>&rarr;</td>` +
                        `<td>${escapeHtml(formatValue(row.required))}</td>` +
                        costCell +
                        `</tr>`
                );
            });
            if (item.percentileSentence) {
                parts.push(
                    `<tr class="item-${i} sentence"><td colspan="5">` +
                        `${escapeHtml(item.percentileSentence)}</td></tr>`
                );
            }
        });
        parts.push(`</tbody></table>`);
        if (!panel.exhausted) {
            parts.push(`<p class="note">More items may exist; raise the item count to see them.</p>`);
        }
    }
    parts.push(`<p class="caveat">${escapeHtml(panel.caveat)}</p>`);
    parts.push(
        `<p class="permalink"><a href="#${encodeURIComponent(panel.permalink)}">permalink to this panel</a></p>`
    );
    return parts.join("\n");
}

export function renderFieldErrors(errors: FieldError[]): Record<string, string> {
    const byField: Record<string, string> = {};
    for (const e of errors) {
        if (!(e.field in byField)) {
            byField[e.field] = e.message;
        }
    }
    return byField;
}
