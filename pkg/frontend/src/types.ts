// Wire types mirroring the annotation service's JSON payloads.

export interface HistoryPoint {
  labeled_count: number;
  accuracy_pct: number | null;
  discovered_classes: number;
}

export interface CurveData {
  labeled_counts: number[];
  accuracy_pct: (number | null)[];
  discovered_classes: number[];
}

export interface SessionView {
  session_id: string;
  name: string | null;
  status: string;
  created_at: string;
  labeled_count: number;
  pool_count: number;
  discovered_classes: number;
  class_registry: Record<string, string>;
  strategy: string;
  batch_size: number;
  history: HistoryPoint[];
  curves: CurveData;
  outstanding_batch_id: string | null;
  state_digest: string;
}

export interface BatchSample {
  sample_id: number;
  posterior: number[];
  features: number[] | null;
  image_url: string | null;
}

export interface QueryBatch {
  batch_id: string;
  session_id: string;
  issued_at: string;
  suggested_label: number;
  suggested_label_name: string;
  samples: BatchSample[];
}

export interface LabelEntry {
  sample_id: number;
  class_id?: number;
  new_class_name?: string;
}

export interface SubmitResult {
  session_id: string;
  status: string;
  labeled_count: number;
  discovered_classes: number;
  new_classes: Record<string, string>;
  record: HistoryPoint;
}

export interface ApiError {
  error: { code: string; message: string };
}

export interface PaletteEntry {
  id: number;
  name: string;
  color: string;
}
