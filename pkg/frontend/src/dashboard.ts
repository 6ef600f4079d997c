/**
 * Planner dashboard: forecast chart, what-if scenarios (reason mandatory),
 * concept explanations, and decision options with accept/reject feedback.
 */

import { ApiClient, DecisionOption, WhatIfResult } from "./api.js";
import { renderChart } from "./chart.js";

export class PlannerDashboard {
  productId = "";
  lastWhatIf: WhatIfResult | null = null;
  history: WhatIfResult[] = [];
  private pendingFeedback = new Set<string>();

  constructor(private root: HTMLElement, private api: ApiClient) {}

  async load(productId: string): Promise<void> {
    this.productId = productId;
    const baseline = await this.api.whatIf({
      product_id: productId,
      label: "baseline view",
      adjustments: [],
    });
    this.lastWhatIf = baseline;
    this.render();
  }

  private render(): void {
    this.root.innerHTML = "";
    const title = document.createElement("h2");
    title.textContent = `Plan: ${this.productId}`;
    this.root.appendChild(title);

    const chartBox = document.createElement("div");
    chartBox.className = "forecast-chart";
    this.root.appendChild(chartBox);
    this.renderChartInto(chartBox);

    this.root.appendChild(this.renderWhatIfForm());

    const historyBox = document.createElement("ul");
    historyBox.className = "adjustment-history";
    this.root.appendChild(historyBox);
    this.renderHistory(historyBox);

    const optionsBox = document.createElement("div");
    optionsBox.className = "options-panel";
    this.root.appendChild(optionsBox);

    const explBox = document.createElement("div");
    explBox.className = "explanation-panel";
    this.root.appendChild(explBox);
  }

  private renderChartInto(box: HTMLElement): void {
    box.innerHTML = "";
    if (!this.lastWhatIf) {
      return;
    }
    const series = [
      { name: "base", values: this.lastWhatIf.base_quantities, color: "#2563eb" },
    ];
    if (this.lastWhatIf.label !== "baseline view") {
      series.push({
        name: "scenario",
        values: this.lastWhatIf.scenario_quantities,
        color: "#dc2626",
      });
    }
    box.appendChild(renderChart(series));
    const delta = document.createElement("p");
    delta.className = "forecast-delta";
    delta.textContent =
      `base forecast ${this.lastWhatIf.base_forecast.toFixed(3)}, ` +
      `scenario ${this.lastWhatIf.scenario_forecast.toFixed(3)} ` +
      `(delta ${this.lastWhatIf.delta >= 0 ? "+" : ""}${this.lastWhatIf.delta.toFixed(3)})`;
    box.appendChild(delta);
  }

  private renderWhatIfForm(): HTMLElement {
    const form = document.createElement("form");
    form.className = "whatif-form";
    form.innerHTML = `
      <h3>What-if adjustment</h3>
      <label>From period <input name="period_start" type="number" value="0"></label>
      <label>To period <input name="period_end" type="number" value="0"></label>
      <label>Multiplier <input name="multiplier" type="number" step="0.1" value="1.5"></label>
      <label>Reason <input name="reason" type="text" placeholder="why this adjustment?"></label>
      <button type="submit" class="run-whatif">Run scenario</button>
      <p class="whatif-validation" style="display:none"></p>
    `;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitAdjustment(form);
    });
    return form;
  }

  /** Reason text is mandatory; scenarios without one never reach the API. */
  async submitAdjustment(form: HTMLFormElement): Promise<WhatIfResult | null> {
    const dataOf = (name: string) =>
      (form.querySelector(`[name=${name}]`) as HTMLInputElement).value;
    const reason = dataOf("reason").trim();
    const validation = form.querySelector<HTMLElement>(".whatif-validation");
    if (!reason) {
      if (validation) {
        validation.textContent = "A reason is required for every adjustment.";
        validation.style.display = "block";
      }
      return null;
    }
    if (validation) {
      validation.style.display = "none";
    }
    const result = await this.api.whatIf({
      product_id: this.productId,
      label: reason,
      adjustments: [
        {
          period_start: Number(dataOf("period_start")),
          period_end: Number(dataOf("period_end")),
          multiplier: Number(dataOf("multiplier")),
        },
      ],
    });
    if (result) {
      this.lastWhatIf = result;
      this.history.push(result);
      const chartBox = this.root.querySelector<HTMLElement>(".forecast-chart");
      if (chartBox) {
        this.renderChartInto(chartBox);
      }
      const historyBox = this.root.querySelector<HTMLElement>(".adjustment-history");
      if (historyBox) {
        this.renderHistory(historyBox);
      }
    }
    return result;
  }

  private renderHistory(box: HTMLElement): void {
    box.innerHTML = "";
    for (const entry of this.history) {
      const item = document.createElement("li");
      item.className = "history-entry";
      item.textContent =
        `${entry.label}: delta ${entry.delta >= 0 ? "+" : ""}${entry.delta.toFixed(3)}`;
      box.appendChild(item);
    }
  }

  async loadOptions(context: Record<string, number>): Promise<DecisionOption[]> {
    const response = await this.api.getOptions(context);
    const options = response?.options ?? [];
    const box = this.root.querySelector<HTMLElement>(".options-panel");
    if (!box) {
      return options;
    }
    box.innerHTML = "<h3>Decision options</h3>";
    for (const option of options) {
      const row = document.createElement("div");
      row.className = "option-row";
      row.dataset.optionId = option.id;
      const text = document.createElement("span");
      text.textContent = `${option.action_text} (score ${option.score.toFixed(2)})`;
      const accept = document.createElement("button");
      accept.type = "button";
      accept.className = "option-accept";
      accept.textContent = "Accept";
      accept.addEventListener("click", () => {
        void this.sendOptionFeedback(option.id, "explicit_positive", accept);
      });
      const reject = document.createElement("button");
      reject.type = "button";
      reject.className = "option-reject";
      reject.textContent = "Reject";
      reject.addEventListener("click", () => {
        void this.sendOptionFeedback(option.id, "explicit_negative", reject);
      });
      row.append(text, accept, reject);
      box.appendChild(row);
    }
    return options;
  }

  private async sendOptionFeedback(
    optionId: string,
    signal: string,
    button: HTMLButtonElement,
  ): Promise<void> {
    const key = `${optionId}:${signal}`;
    if (this.pendingFeedback.has(key) || button.disabled) {
      return;
    }
    this.pendingFeedback.add(key);
    button.disabled = true;
    try {
      await this.api.sendFeedback({
        subject_kind: "option",
        subject_ref: optionId,
        signal,
      });
      button.classList.add("sent");
    } finally {
      this.pendingFeedback.delete(key);
    }
  }

  async showExplanation(explanationId: string): Promise<void> {
    const explanation = await this.api.getExplanation(explanationId);
    const box = this.root.querySelector<HTMLElement>(".explanation-panel");
    if (!box || !explanation) {
      return;
    }
    box.innerHTML = "<h3>Why this forecast</h3>";
    const list = document.createElement("ol");
    const ranking = (explanation.payload.ranking ?? []) as Array<{
      concept?: string;
      label?: string;
      feature?: string;
      importance: number;
    }>;
    for (const item of ranking) {
      const li = document.createElement("li");
      const name = item.label ?? item.concept ?? item.feature ?? "?";
      li.textContent = `${name}: ${(item.importance * 100).toFixed(1)}%`;
      list.appendChild(li);
    }
    box.appendChild(list);
  }
}
