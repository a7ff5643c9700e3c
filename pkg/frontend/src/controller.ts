/**
 * Submission controller: one in-flight exploration per panel. Every submit
 * gets a sequence number; a response is dropped when a newer submit has
 * started since, so a slow solve can never overwrite a fresher panel.
 */

import { RecourseClient } from "./api.js";
import { ResultPanel, presentResult } from "./presenter.js";
import { DraftScenario, encodePermalink, toFlipsetRequest } from "./state.js";
import { ApiError } from "./types.js";

export type PanelOutcome =
    | { kind: "panel"; panel: ResultPanel; seq: number }
    | { kind: "error"; message: string; field?: string; seq: number }
    | { kind: "stale"; seq: number };

export class ExplorerController {
    private readonly client: RecourseClient;
    private submitted = 0;
    private rendered = 0;

    constructor(client: RecourseClient) {
        this.client = client;
    }

    async submit(draft: DraftScenario): Promise<PanelOutcome> {
        const seq = ++this.submitted;
        const body = toFlipsetRequest(draft);
        try {
            const response = await this.client.flipset(body);
            if (seq <= this.rendered) {
                return { kind: "stale", seq };
            }
            this.rendered = seq;
            return {
                kind: "panel",
                panel: presentResult(response, draft.costVariant, encodePermalink(body)),
                seq,
            };
        } catch (err) {
            if (seq <= this.rendered) {
                return { kind: "stale", seq };
            }
            this.rendered = seq;
            if (err instanceof ApiError) {
                return { kind: "error", message: err.message, field: err.field, seq };
            }
            return { kind: "error", message: String(err), seq };
        }
    }
}
