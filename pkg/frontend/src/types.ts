/** Wire types mirroring the annotation service JSON contract. */

export interface CurvePoint {
  iteration: number;
  labeled_size: number;
  accuracy: number;
}

export interface StatusDoc {
  iteration: number;
  labeled_size: number;
  pool_size: number;
  discarded: number;
  test_accuracy: number | null;
  strategy: string;
  num_classes: number;
  complete: boolean;
  curve: CurvePoint[];
}

export type DisplayPayload =
  | { kind: "asset"; ref: string }
  | {
      kind: "features";
      dimensionality: number;
      preview: number[];
      norm: number;
      tag: string | null;
    };

export interface PendingQueryDoc {
  query_id: string;
  instance_id: string;
  display_payload: DisplayPayload;
  strategy_score: number;
  issued_at: number;
}

export interface ApiError {
  code: string;
  message: string;
}

/** Outcome of one labeling decision: a class index, or a rejection. */
export type Choice = { kind: "label"; classIndex: number } | { kind: "reject" };
