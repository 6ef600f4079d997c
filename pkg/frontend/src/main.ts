/** Page shell: role picker wiring the three console views to the /v1 API. */

import { ApiClient } from "./api.js";
import { AnnotationView } from "./annotation.js";
import { PlannerDashboard } from "./dashboard.js";
import { QueueMonitor } from "./monitor.js";

export function mountConsole(root: HTMLElement, baseUrl = "/v1"): void {
  root.innerHTML = `
    <header class="console-header">
      <h1>Workbench console</h1>
      <label>Signed in as
        <select class="role-picker">
          <option value="annotator">annotator</option>
          <option value="planner">planner</option>
        </select>
      </label>
      <input class="actor-name" value="operator-1">
    </header>
    <main class="console-main"></main>
  `;
  const main = root.querySelector<HTMLElement>(".console-main")!;
  const rolePicker = root.querySelector<HTMLSelectElement>(".role-picker")!;
  const actorInput = root.querySelector<HTMLInputElement>(".actor-name")!;

  let monitor: QueueMonitor | null = null;

  const show = async () => {
    monitor?.stop();
    main.innerHTML = "";
    const api = new ApiClient(baseUrl, rolePicker.value, actorInput.value);
    if (rolePicker.value === "annotator") {
      const annotationRoot = document.createElement("section");
      main.appendChild(annotationRoot);
      const view = new AnnotationView(annotationRoot, api);
      await view.loadNext();
    } else {
      const dashRoot = document.createElement("section");
      const monitorRoot = document.createElement("section");
      main.append(dashRoot, monitorRoot);
      const dashboard = new PlannerDashboard(dashRoot, api);
      await dashboard.load("product_000");
      monitor = new QueueMonitor(monitorRoot, api);
      await monitor.start();
    }
  };

  rolePicker.addEventListener("change", () => void show());
  void show();
}

declare global {
  interface Window {
    mountConsole: typeof mountConsole;
  }
}

if (typeof window !== "undefined") {
  window.mountConsole = mountConsole;
}
