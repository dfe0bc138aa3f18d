// Session view-model: palette derivation, per-sample label assignments,
// and the completeness gate for submission.

import type { PaletteEntry, QueryBatch, SessionView } from "./types.js";

const PALETTE_COLORS = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

export function paletteFromRegistry(
  registry: Record<string, string>,
): PaletteEntry[] {
  return Object.entries(registry)
    .map(([id, name]) => ({ id: Number(id), name }))
    .sort((a, b) => a.id - b.id)
    .map((entry, i) => ({
      ...entry,
      color: PALETTE_COLORS[i % PALETTE_COLORS.length]!,
    }));
}

export type Assignment =
  | { kind: "existing"; classId: number }
  | { kind: "new"; name: string };

export class BatchLabeling {
  readonly assignments = new Map<number, Assignment>();

  constructor(readonly batch: QueryBatch) {}

  assign(sampleId: number, assignment: Assignment): void {
    if (!this.batch.samples.some((s) => s.sample_id === sampleId)) {
      throw new Error(`sample ${sampleId} is not part of the batch`);
    }
    this.assignments.set(sampleId, assignment);
  }

  acceptAllSuggestions(): void {
    for (const sample of this.batch.samples) {
      this.assignments.set(sample.sample_id, {
        kind: "existing",
        classId: this.batch.suggested_label,
      });
    }
  }

  get complete(): boolean {
    return this.batch.samples.every((s) =>
      this.assignments.has(s.sample_id),
    );
  }

  toLabelEntries() {
    if (!this.complete) {
      throw new Error("cannot submit: some samples are unlabeled");
    }
    return this.batch.samples.map((sample) => {
      const a = this.assignments.get(sample.sample_id)!;
      return a.kind === "existing"
        ? { sample_id: sample.sample_id, class_id: a.classId }
        : { sample_id: sample.sample_id, new_class_name: a.name };
    });
  }
}

export interface UiSessionView {
  session: SessionView;
  palette: PaletteEntry[];
  labeling: BatchLabeling | null;
}

export function makeView(
  session: SessionView,
  labeling: BatchLabeling | null,
): UiSessionView {
  return { session, palette: paletteFromRegistry(session.class_registry), labeling };
}
