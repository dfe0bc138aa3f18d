// Batch grid: one card per queried sample with the model's suggestion
// pre-selected; hotkeys 1-9 assign palette classes, "n" opens the
// new-class dialog, "a" accepts every suggestion.

import type { BatchLabeling } from "./state.js";
import type { BatchSample, PaletteEntry } from "./types.js";

export interface BatchCallbacks {
  onChanged: () => void;
  onSubmit: () => void;
  onNewClass: (sampleId: number | null) => void;
}

function sparkline(features: number[]): SVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 100 32");
  svg.classList.add("sparkline");
  const min = Math.min(...features);
  const max = Math.max(...features);
  const span = max - min || 1;
  const step = 100 / Math.max(features.length - 1, 1);
  const points = features
    .map((v, i) => `${(i * step).toFixed(2)},${(30 - ((v - min) / span) * 28).toFixed(2)}`)
    .join(" ");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  svg.appendChild(line);
  return svg;
}

function thumbnail(sample: BatchSample): HTMLElement {
  if (sample.image_url) {
    const img = document.createElement("img");
    img.src = sample.image_url;
    img.alt = `sample ${sample.sample_id}`;
    img.className = "thumb";
    return img;
  }
  const holder = document.createElement("div");
  holder.className = "thumb";
  holder.appendChild(sparkline(sample.features ?? []));
  return holder;
}

function labelPicker(
  sample: BatchSample,
  palette: PaletteEntry[],
  labeling: BatchLabeling,
  callbacks: BatchCallbacks,
): HTMLElement {
  const select = document.createElement("select");
  select.className = "label-picker";
  select.dataset.sampleId = String(sample.sample_id);
  for (const entry of palette) {
    const option = document.createElement("option");
    option.value = String(entry.id);
    option.textContent = `${entry.id}: ${entry.name}`;
    select.appendChild(option);
  }
  const newOption = document.createElement("option");
  newOption.value = "__new__";
  newOption.textContent = "new class…";
  select.appendChild(newOption);

  const current = labeling.assignments.get(sample.sample_id);
  if (current?.kind === "existing") {
    select.value = String(current.classId);
  } else if (current?.kind === "new") {
    newOption.textContent = `new: ${current.name}`;
    select.value = "__new__";
  }

  select.addEventListener("change", () => {
    if (select.value === "__new__") {
      callbacks.onNewClass(sample.sample_id);
      return;
    }
    labeling.assign(sample.sample_id, {
      kind: "existing",
      classId: Number(select.value),
    });
    callbacks.onChanged();
  });
  return select;
}

export function renderBatch(
  container: HTMLElement,
  labeling: BatchLabeling,
  palette: PaletteEntry[],
  callbacks: BatchCallbacks,
): void {
  container.textContent = "";
  const batch = labeling.batch;

  const header = document.createElement("div");
  header.className = "batch-header";
  header.textContent =
    `Batch ${batch.batch_id} — suggested label: ` +
    `${batch.suggested_label_name} (${batch.suggested_label})`;
  container.appendChild(header);

  const grid = document.createElement("div");
  grid.className = "batch-grid";
  for (const sample of batch.samples) {
    const card = document.createElement("div");
    card.className = "card";
    card.dataset.sampleId = String(sample.sample_id);
    card.appendChild(thumbnail(sample));

    const posterior = document.createElement("div");
    posterior.className = "posterior";
    const top = sample.posterior.indexOf(Math.max(...sample.posterior));
    posterior.textContent =
      `p(${top}) = ${(sample.posterior[top] ?? 0).toFixed(3)}`;
    card.appendChild(posterior);

    card.appendChild(labelPicker(sample, palette, labeling, callbacks));
    grid.appendChild(card);
  }
  container.appendChild(grid);

  const submit = document.createElement("button");
  submit.className = "submit-labels";
  submit.textContent = "Submit labels";
  submit.disabled = !labeling.complete;
  submit.addEventListener("click", () => callbacks.onSubmit());
  container.appendChild(submit);
}

export function handleBatchHotkey(
  key: string,
  labeling: BatchLabeling,
  palette: PaletteEntry[],
  focusedSampleId: number | null,
  callbacks: BatchCallbacks,
): boolean {
  if (key === "a") {
    labeling.acceptAllSuggestions();
    callbacks.onChanged();
    return true;
  }
  if (key === "n") {
    callbacks.onNewClass(focusedSampleId);
    return true;
  }
  if (/^[1-9]$/.test(key) && focusedSampleId !== null) {
    const entry = palette[Number(key) - 1];
    if (entry) {
      labeling.assign(focusedSampleId, { kind: "existing", classId: entry.id });
      callbacks.onChanged();
      return true;
    }
  }
  return false;
}
