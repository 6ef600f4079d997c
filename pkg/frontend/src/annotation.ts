/**
 * Annotation screen: reference image, inspected image, hint overlays, label
 * buttons. Labeling time runs from task render to submission, and every
 * submission posts exactly one label record (double clicks are swallowed).
 */

import { ApiClient, Explanation, QueryTaskView } from "./api.js";
import { mapToOverlayUrl, toDataUrl } from "./bmp.js";

type Clock = () => number;

export interface AnnotationCallbacks {
  onSubmitted?: (taskId: string) => void;
}

interface HintView {
  kind: string;
  explanation: Explanation;
}

const HINT_LABELS: Record<string, string> = {
  saliency_map: "Saliency",
  anomaly_map: "Anomaly",
  nearest_neighbor: "Most similar",
};

export class AnnotationView {
  task: QueryTaskView | null = null;
  hints: HintView[] = [];
  activeHint: string | null = null;
  selectedLabel: string | null = null;
  private renderedAt = 0;
  private submitting = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private callbacks: AnnotationCallbacks = {},
    private clock: Clock = () => performance.now(),
  ) {}

  async loadNext(): Promise<QueryTaskView | null> {
    const task = await this.api.queueNext();
    this.task = task;
    this.hints = [];
    this.activeHint = null;
    this.selectedLabel = null;
    this.submitting = false;
    if (task) {
      for (const hintId of task.hints) {
        const explanation = await this.api.getExplanation(hintId);
        if (explanation) {
          this.hints.push({ kind: explanation.kind, explanation });
        }
      }
    }
    this.render();
    this.renderedAt = this.clock();
    return task;
  }

  private render(): void {
    this.root.innerHTML = "";
    if (!this.task) {
      const empty = document.createElement("p");
      empty.className = "queue-empty";
      empty.textContent = "Queue is empty. Well done!";
      this.root.appendChild(empty);
      return;
    }

    const layout = document.createElement("div");
    layout.className = "annotation-layout";

    if (this.task.reference_payload) {
      const panel = document.createElement("figure");
      panel.className = "reference-panel";
      const img = document.createElement("img");
      img.className = "reference-image";
      img.src = toDataUrl(this.task.reference_payload);
      const caption = document.createElement("figcaption");
      caption.textContent = `Reference (${this.task.reference_label ?? "good"})`;
      panel.append(img, caption);
      layout.appendChild(panel);
    }

    const inspect = document.createElement("figure");
    inspect.className = "inspect-panel";
    const stack = document.createElement("div");
    stack.className = "image-stack";
    if (this.task.sample_payload) {
      const img = document.createElement("img");
      img.className = "inspected-image";
      img.src = toDataUrl(this.task.sample_payload);
      stack.appendChild(img);
      const overlay = document.createElement("img");
      overlay.className = "hint-overlay";
      overlay.style.display = "none";
      overlay.style.opacity = "0.55";
      stack.appendChild(overlay);
    } else {
      const note = document.createElement("p");
      note.textContent = `Sample ${this.task.sample_id} (no image payload)`;
      stack.appendChild(note);
    }
    const caption = document.createElement("figcaption");
    caption.textContent = `Task ${this.task.task_id} · strategy ${this.task.strategy_name}`;
    inspect.append(stack, caption);
    layout.appendChild(inspect);

    const side = document.createElement("div");
    side.className = "side-panel";
    side.appendChild(this.renderHintControls());
    side.appendChild(this.renderLabelButtons());
    layout.appendChild(side);

    this.root.appendChild(layout);
  }

  private renderHintControls(): HTMLElement {
    const box = document.createElement("div");
    box.className = "hint-controls";
    if (!this.hints.length) {
      const none = document.createElement("p");
      none.textContent = "No hints attached.";
      box.appendChild(none);
      return box;
    }
    const title = document.createElement("h3");
    title.textContent = "Hints";
    box.appendChild(title);
    for (const hint of this.hints) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "hint-toggle";
      button.dataset.kind = hint.kind;
      button.textContent = HINT_LABELS[hint.kind] ?? hint.kind;
      button.addEventListener("click", () => this.toggleHint(hint.kind));
      box.appendChild(button);
    }
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "100";
    slider.value = "55";
    slider.className = "overlay-opacity";
    slider.addEventListener("input", () => {
      const overlay = this.root.querySelector<HTMLImageElement>(".hint-overlay");
      if (overlay) {
        overlay.style.opacity = String(Number(slider.value) / 100);
      }
    });
    box.appendChild(slider);
    const neighbor = document.createElement("div");
    neighbor.className = "neighbor-panel";
    neighbor.style.display = "none";
    box.appendChild(neighbor);
    return box;
  }

  /** Toggle a hint on/off; overlays swap client-side without any re-fetch. */
  toggleHint(kind: string): void {
    const hint = this.hints.find((h) => h.kind === kind);
    if (!hint) {
      return;
    }
    const overlay = this.root.querySelector<HTMLImageElement>(".hint-overlay");
    const neighborPanel = this.root.querySelector<HTMLElement>(".neighbor-panel");
    if (this.activeHint === kind) {
      this.activeHint = null;
      if (overlay) overlay.style.display = "none";
      if (neighborPanel) neighborPanel.style.display = "none";
      return;
    }
    this.activeHint = kind;
    const payload = hint.explanation.payload as {
      width?: number;
      height?: number;
      map?: number[];
      neighbor_label?: string;
      ssim?: number;
      neighbor_payload?: { width: number; height: number; pixels: number[] };
    };
    if (kind === "nearest_neighbor") {
      if (overlay) overlay.style.display = "none";
      if (neighborPanel) {
        neighborPanel.style.display = "block";
        neighborPanel.innerHTML = "";
        if (payload.neighbor_payload) {
          const img = document.createElement("img");
          img.className = "neighbor-image";
          img.src = toDataUrl(payload.neighbor_payload);
          neighborPanel.appendChild(img);
        }
        const label = document.createElement("p");
        label.className = "neighbor-label";
        const ssim = payload.ssim === undefined ? "" : ` (SSIM ${payload.ssim.toFixed(3)})`;
        label.textContent = `Most similar labeled: ${payload.neighbor_label}${ssim}`;
        neighborPanel.appendChild(label);
      }
    } else if (overlay && payload.map && payload.width && payload.height) {
      overlay.src = mapToOverlayUrl(payload.width, payload.height, payload.map);
      overlay.style.display = "block";
      if (neighborPanel) neighborPanel.style.display = "none";
    }
  }

  private renderLabelButtons(): HTMLElement {
    const box = document.createElement("div");
    box.className = "label-controls";
    const title = document.createElement("h3");
    title.textContent = "Label";
    box.appendChild(title);
    const choices = this.task?.label_choices ?? ["good", "double_print", "interrupted_print"];
    for (const choice of choices) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "label-choice";
      button.dataset.label = choice;
      button.textContent = choice.replace("_", " ");
      button.addEventListener("click", () => {
        this.selectedLabel = choice;
        for (const other of Array.from(
          this.root.querySelectorAll<HTMLButtonElement>(".label-choice"),
        )) {
          other.classList.toggle("selected", other === button);
        }
        this.clearValidation();
      });
      box.appendChild(button);
    }
    const submit = document.createElement("button");
    submit.type = "button";
    submit.className = "submit-label";
    submit.textContent = "Submit label";
    submit.addEventListener("click", () => {
      void this.submit();
    });
    box.appendChild(submit);
    const validation = document.createElement("p");
    validation.className = "validation-error";
    validation.style.display = "none";
    box.appendChild(validation);
    return box;
  }

  private clearValidation(): void {
    const validation = this.root.querySelector<HTMLElement>(".validation-error");
    if (validation) {
      validation.style.display = "none";
      validation.textContent = "";
    }
  }

  /** Post the label exactly once; returns the elapsed ms or null if blocked. */
  async submit(): Promise<number | null> {
    if (!this.task || this.submitting) {
      return null;
    }
    if (!this.selectedLabel) {
      const validation = this.root.querySelector<HTMLElement>(".validation-error");
      if (validation) {
        validation.textContent = "Pick a label before submitting.";
        validation.style.display = "block";
      }
      return null;
    }
    this.submitting = true;
    const button = this.root.querySelector<HTMLButtonElement>(".submit-label");
    if (button) {
      button.disabled = true;
    }
    const elapsed = Math.max(1, Math.round(this.clock() - this.renderedAt));
    const taskId = this.task.task_id;
    try {
      await this.api.submitLabel({
        task_id: taskId,
        label: this.selectedLabel,
        elapsed_ms: elapsed,
        hint_shown: this.activeHint,
      });
    } finally {
      this.submitting = false;
    }
    this.callbacks.onSubmitted?.(taskId);
    await this.loadNext();
    return elapsed;
  }
}
