/**
 * Thin client for the /v1 recourse endpoints. All recourse numbers shown in
 * the UI come from these responses; nothing is recomputed locally.
 */

import {
    ApiError,
    ApiErrorBody,
    FlipsetRequest,
    FlipsetResponse,
    ModelMetadata,
    PredictResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class RecourseClient {
    private readonly baseUrl: string;
    private readonly fetchImpl: FetchLike;

    constructor(baseUrl: string, fetchImpl?: FetchLike) {
        this.baseUrl = baseUrl.replace(/\/$/, "");
        this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    }

    async modelMetadata(): Promise<ModelMetadata> {
        return this.request<ModelMetadata>("GET", "/v1/model");
    }

    async predict(x: Record<string, number>): Promise<PredictResponse> {
        return this.request<PredictResponse>("POST", "/v1/predict", { x });
    }

    async flipset(body: FlipsetRequest): Promise<FlipsetResponse> {
        return this.request<FlipsetResponse>("POST", "/v1/flipset", body);
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
            method,
            headers: body === undefined ? undefined : { "content-type": "application/json" },
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        const text = await response.text();
        let parsed: unknown;
        try {
            parsed = JSON.parse(text);
        } catch {
            throw new ApiError(response.status, { error: `invalid response: ${text.slice(0, 80)}` });
        }
        if (!response.ok) {
            throw new ApiError(response.status, parsed as ApiErrorBody);
        }
        return parsed as T;
    }
}
