/** Payload types for the /v1 recourse service endpoints. */

export type Actionability = "fixed" | "any" | "increase_only" | "decrease_only";
export type FeatureKind = "real" | "integer" | "binary";
export type CostVariant = "max_pct" | "total_log_pct" | "linear";

export interface FeatureMeta {
    name: string;
    kind: FeatureKind;
    lb: number;
    ub: number;
    actionability: Actionability;
    grid_size: number;
    linked_group: string | null;
}

export interface ModelMetadata {
    feature_names: string[];
    intercept: number;
    coefficients: Record<string, number>;
    actions: FeatureMeta[];
    cost_variants: string[];
}

export interface PredictResponse {
    score: number;
    label: -1 | 1;
}

export interface OverrideEdit {
    actionability?: Actionability;
    lb?: number;
    ub?: number;
    grid_size?: number;
}

/** Request body of POST /v1/flipset; also the permalink payload. */
export interface FlipsetRequest {
    x: Record<string, number>;
    overrides?: Record<string, OverrideEdit>;
    cost_variant: CostVariant;
    T: number;
    margin: number;
}

export interface FlipsetChange {
    feature: string;
    current: number;
    required: number;
}

export interface FlipsetItemPayload {
    changes: FlipsetChange[];
    cost: number;
}

export interface FlipsetResponse {
    prediction: PredictResponse;
    items: FlipsetItemPayload[];
    exhausted: boolean;
    caveat: string;
}

export interface ApiErrorBody {
    error: string;
    field?: string;
}

export class ApiError extends Error {
    readonly status: number;
    readonly field?: string;

    constructor(status: number, body: ApiErrorBody) {
        super(body.error);
        this.status = status;
        this.field = body.field;
    }
}
