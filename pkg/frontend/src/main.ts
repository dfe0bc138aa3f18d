// Application wiring: session lifecycle, status polling, batch labeling,
// and error banners. Server errors (409/410/...) surface as non-blocking
// banners and the client recovers by re-polling status.

import { AnnotateClient, ServiceError } from "./api.js";
import { handleBatchHotkey, renderBatch } from "./batch.js";
import { renderCurves } from "./curves.js";
import { BatchLabeling, makeView, paletteFromRegistry } from "./state.js";
import type { SessionView } from "./types.js";

const POLL_INTERVAL_MS = 2000;

export class App {
  labeling: BatchLabeling | null = null;
  session: SessionView | null = null;
  focusedSampleId: number | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    readonly client: AnnotateClient,
    readonly root: HTMLElement,
  ) {}

  banner(text: string, kind: "info" | "error" = "info"): void {
    const host = this.root.querySelector<HTMLElement>(".banners")!;
    const el = document.createElement("div");
    el.className = `banner banner-${kind}`;
    el.textContent = text;
    host.appendChild(el);
    setTimeout(() => el.remove(), 6000);
  }

  async refresh(): Promise<void> {
    if (!this.session) return;
    this.session = await this.client.getSession(this.session.session_id);
    if (this.session.outstanding_batch_id === null) {
      this.labeling = null;
    }
    this.render();
  }

  async start(sessionId: string): Promise<void> {
    this.session = await this.client.getSession(sessionId);
    this.render();
    this.stopPolling();
    this.pollTimer = setInterval(() => {
      this.refresh().catch((e) => this.banner(String(e), "error"));
    }, POLL_INTERVAL_MS);
  }

  stopPolling(): void {
    if (this.pollTimer) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  async fetchBatch(): Promise<void> {
    if (!this.session) return;
    try {
      const batch = await this.client.nextBatch(this.session.session_id);
      this.labeling = new BatchLabeling(batch);
      await this.refresh();
    } catch (e) {
      this.surface(e);
    }
  }

  async submit(): Promise<void> {
    if (!this.session || !this.labeling) return;
    try {
      const result = await this.client.submitLabels(
        this.session.session_id,
        this.labeling.batch.batch_id,
        this.labeling.toLabelEntries(),
      );
      const created = Object.values(result.new_classes);
      if (created.length > 0) {
        this.banner(`new class(es): ${created.join(", ")}`);
      }
      this.labeling = null;
      await this.refresh();
    } catch (e) {
      this.surface(e);
      await this.refresh();
    }
  }

  surface(e: unknown): void {
    if (e instanceof ServiceError) {
      this.banner(`${e.status} ${e.code}: ${e.message}`, "error");
    } else {
      this.banner(String(e), "error");
    }
  }

  promptNewClass(sampleId: number | null): void {
    if (!this.labeling) return;
    const name = window.prompt("Name for the new class:");
    if (!name) {
      this.render();
      return;
    }
    if (sampleId !== null) {
      this.labeling.assign(sampleId, { kind: "new", name });
    }
    this.render();
  }

  handleKey(event: KeyboardEvent): void {
    if (!this.labeling) return;
    if (event.target instanceof HTMLInputElement) return;
    const palette = paletteFromRegistry(this.session!.class_registry);
    const handled = handleBatchHotkey(
      event.key,
      this.labeling,
      palette,
      this.focusedSampleId,
      this.callbacks(),
    );
    if (handled) event.preventDefault();
  }

  private callbacks() {
    return {
      onChanged: () => this.render(),
      onSubmit: () => void this.submit(),
      onNewClass: (sampleId: number | null) => this.promptNewClass(sampleId),
    };
  }

  render(): void {
    if (!this.session) return;
    const view = makeView(this.session, this.labeling);

    const status = this.root.querySelector<HTMLElement>(".status-badge")!;
    status.textContent = view.session.status;
    status.dataset.status = view.session.status;

    const meta = this.root.querySelector<HTMLElement>(".session-meta")!;
    meta.textContent =
      `labeled ${view.session.labeled_count} · pool ${view.session.pool_count}` +
      ` · ${view.session.discovered_classes} classes`;

    const paletteHost = this.root.querySelector<HTMLElement>(".palette")!;
    paletteHost.textContent = "";
    for (const entry of view.palette) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.style.background = entry.color;
      chip.textContent = `${entry.id} ${entry.name}`;
      paletteHost.appendChild(chip);
    }

    const batchHost = this.root.querySelector<HTMLElement>(".batch")!;
    if (this.labeling) {
      renderBatch(batchHost, this.labeling, view.palette, this.callbacks());
    } else {
      batchHost.textContent = "";
      const button = document.createElement("button");
      button.className = "next-batch";
      button.textContent = "Request next batch";
      button.addEventListener("click", () => void this.fetchBatch());
      batchHost.appendChild(button);
    }

    renderCurves(this.root.querySelector<HTMLElement>(".curves")!,
                 view.session.curves);
  }
}

const DEFAULT_SESSION_REQUEST = {
  dataset: {
    synthetic: {
      num_classes: 2, feature_dim: 16, samples_per_class: 60,
      class_mean_scale: 3.0, noise_sigma: 0.5, rng_seed: 0, test_per_class: 20,
    },
  },
  protocol: {
    num_known_classes: 1, num_novel_classes: 1,
    initial_per_class: 20, pool_per_class: 20,
  },
  selection: {
    num_sets: 10, set_size: 5, eval_subset_size: 15, strategy: "emoc",
  },
  seed: 0,
};

export function renderCreateForm(app: App): void {
  const host = app.root.querySelector<HTMLElement>(".batch")!;
  host.textContent = "";
  const form = document.createElement("div");
  form.className = "create-form";
  const textarea = document.createElement("textarea");
  textarea.className = "session-request";
  textarea.rows = 12;
  textarea.value = JSON.stringify(DEFAULT_SESSION_REQUEST, null, 2);
  const button = document.createElement("button");
  button.className = "create-session";
  button.textContent = "Create session";
  button.addEventListener("click", () => {
    void (async () => {
      try {
        const request = JSON.parse(textarea.value);
        const { session_id } = await app.client.createSession(request);
        await app.start(session_id);
      } catch (e) {
        app.surface(e);
      }
    })();
  });
  form.append(textarea, button);
  host.appendChild(form);
}

export function mount(root: HTMLElement, baseUrl = ""): App {
  root.innerHTML = `
    <header>
      <h1>Batch annotation</h1>
      <span class="status-badge"></span>
      <span class="session-meta"></span>
    </header>
    <div class="banners"></div>
    <div class="palette"></div>
    <main class="batch"></main>
    <section class="curves"></section>
  `;
  const app = new App(new AnnotateClient(baseUrl), root);
  document.addEventListener("keydown", (e) => app.handleKey(e));
  root.addEventListener("focusin", (e) => {
    const card = (e.target as HTMLElement).closest<HTMLElement>(".card");
    app.focusedSampleId = card ? Number(card.dataset.sampleId) : null;
  });
  return app;
}

declare global {
  interface Window {
    annotateApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const root = document.getElementById("app")!;
  const app = mount(root);
  window.annotateApp = app;
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session");
  if (sessionId) {
    void app.start(sessionId);
  } else {
    renderCreateForm(app);
  }
}
