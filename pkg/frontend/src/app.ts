// Canvas workspace UI: pan/zoom surface, draggable control widgets, the
// widget panel with its glow, the streaming editor, and the menu bar.
//
// Rendering is optimistic during streams (deltas append to the editor as
// they arrive) and authoritative otherwise: after every mutation the
// workspace is re-fetched and re-rendered from server state.

import { ApiClient, ApiRequestError } from "./api.js";
import {
  activePairs,
  rephraseEnabled,
  widgetVisualState,
  wordCount,
  type ControlWidget,
  type Workspace,
} from "./state.js";
import {
  canvasToScreen,
  identityViewport,
  panBy,
  screenToCanvas,
  zoomAt,
  type Viewport,
} from "./viewport.js";

const api = new ApiClient("");

let workspace: Workspace | null = null;
let viewport: Viewport = identityViewport();
let openWidgetId: string | null = null;
let streaming = false;

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

function notify(message: string) {
  const bar = $("notice");
  bar.textContent = message;
  bar.classList.add("visible");
  setTimeout(() => bar.classList.remove("visible"), 4000);
}

async function guarded<T>(work: () => Promise<T>): Promise<T | undefined> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiRequestError) notify(err.message);
    else notify(String(err));
    return undefined;
  }
}

async function refresh() {
  if (!workspace) return;
  workspace = await api.getWorkspace(workspace.id);
  render();
}

// -- rendering ----------------------------------------------------------------

function render() {
  if (!workspace) return;
  renderCanvasWidgets();
  renderPanel();
  renderEditor();
  renderHistory();
  $("workspace-name").textContent = workspace.name;
  ($("rephrase") as HTMLButtonElement).disabled =
    streaming || !rephraseEnabled(workspace.widgets);
  $("active-count").textContent = String(activePairs(workspace.widgets).length);
}

function widgetElement(w: ControlWidget): HTMLElement {
  const el = document.createElement("div");
  el.className = `widget ${widgetVisualState(w)}`;
  el.dataset.id = w.id;

  const title = document.createElement("div");
  title.className = "widget-title";
  title.textContent = w.title || "(untitled)";
  title.addEventListener("dblclick", () => editTitle(w));
  el.appendChild(title);

  const value = document.createElement("div");
  value.className = "widget-value";
  value.textContent = w.value || "(no value)";
  el.appendChild(value);

  if (openWidgetId === w.id) el.appendChild(widgetDetail(w));

  el.addEventListener("click", (ev) => {
    if ((ev.target as HTMLElement).closest(".widget-detail")) return;
    openWidgetId = openWidgetId === w.id ? null : w.id;
    render();
  });
  return el;
}

function widgetDetail(w: ControlWidget): HTMLElement {
  const detail = document.createElement("div");
  detail.className = "widget-detail";

  const list = document.createElement("ul");
  w.options.forEach((opt, i) => {
    const item = document.createElement("li");
    item.textContent = opt;
    item.title = "Set as the widget value";
    item.addEventListener("click", () =>
      guarded(() => api.selectOption(workspace!.id, w.id, i)).then(refresh),
    );
    list.appendChild(item);
  });
  detail.appendChild(list);

  const valueInput = document.createElement("input");
  valueInput.value = w.value;
  valueInput.placeholder = "value";
  valueInput.addEventListener("change", () =>
    guarded(() => api.updateWidget(workspace!.id, w.id, { value: valueInput.value }))
      .then(refresh),
  );
  detail.appendChild(valueInput);

  const actions: Array<[string, () => Promise<unknown>]> = [
    ["Save input", () => api.saveInput(workspace!.id, w.id)],
    ["Extract value", () => api.extractValue(workspace!.id, w.id)],
    ["Get suggestions", () => api.suggestOptions(workspace!.id, w.id)],
    [
      "Prompt for options",
      async () => {
        const guiding = window.prompt("Prompt for options:");
        if (guiding) await api.suggestOptions(workspace!.id, w.id, guiding);
      },
    ],
  ];
  for (const [label, action] of actions) {
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.addEventListener("click", () => guarded(action).then(refresh));
    detail.appendChild(btn);
  }

  const del = document.createElement("button");
  del.textContent = "Delete";
  del.className = "danger";
  del.addEventListener("click", () =>
    guarded(() => api.deleteWidget(workspace!.id, w.id)).then(refresh),
  );
  detail.appendChild(del);
  return detail;
}

function renderCanvasWidgets() {
  const layer = $("canvas-layer");
  layer.innerHTML = "";
  for (const w of workspace!.widgets) {
    if (w.zone !== "canvas" || !w.position) continue;
    const el = widgetElement(w);
    const screen = canvasToScreen({ x: w.position[0], y: w.position[1] }, viewport);
    el.style.left = `${screen.x}px`;
    el.style.top = `${screen.y}px`;
    el.style.width = `${w.size[0] * viewport.zoom}px`;
    makeDraggable(el, w);
    layer.appendChild(el);
  }
}

function renderPanel() {
  const panel = $("panel-widgets");
  panel.innerHTML = "";
  for (const w of workspace!.widgets) {
    if (w.zone !== "panel") continue;
    const el = widgetElement(w);
    el.draggable = true;
    el.addEventListener("dragstart", (ev) => {
      ev.dataTransfer?.setData("text/widget-id", w.id);
    });
    panel.appendChild(el);
  }
}

function renderEditor() {
  const editor = $("editor") as HTMLTextAreaElement;
  if (!streaming && document.activeElement !== editor) {
    editor.value = workspace!.document.content;
  }
  $("word-count").textContent = `${wordCount(editor.value)} words`;
}

function renderHistory() {
  const select = $("history") as HTMLSelectElement;
  select.innerHTML = "<option value=''>History…</option>";
  workspace!.document.history.forEach((rev, i) => {
    const opt = document.createElement("option");
    opt.value = String(i);
    const preview = rev.text.slice(0, 40) || "(empty)";
    opt.textContent = `#${i} [${rev.cause}] ${preview}`;
    select.appendChild(opt);
  });
}

// -- canvas interaction -------------------------------------------------------

function makeDraggable(el: HTMLElement, w: ControlWidget) {
  el.addEventListener("pointerdown", (down) => {
    if ((down.target as HTMLElement).closest(".widget-detail")) return;
    down.stopPropagation();
    const start = { x: down.clientX, y: down.clientY };
    const origin = { x: w.position![0], y: w.position![1] };
    let moved = false;

    const onMove = (move: PointerEvent) => {
      const dx = (move.clientX - start.x) / viewport.zoom;
      const dy = (move.clientY - start.y) / viewport.zoom;
      if (Math.abs(dx) + Math.abs(dy) > 1) moved = true;
      const screen = canvasToScreen({ x: origin.x + dx, y: origin.y + dy }, viewport);
      el.style.left = `${screen.x}px`;
      el.style.top = `${screen.y}px`;
    };
    const onUp = (up: PointerEvent) => {
      window.removeEventListener("pointermove", onMove);
      window.removeEventListener("pointerup", onUp);
      if (!moved) return;
      const dx = (up.clientX - start.x) / viewport.zoom;
      const dy = (up.clientY - start.y) / viewport.zoom;
      guarded(() =>
        api.moveWidget(workspace!.id, w.id, "canvas", [origin.x + dx, origin.y + dy]),
      ).then(refresh);
    };
    window.addEventListener("pointermove", onMove);
    window.addEventListener("pointerup", onUp);
  });
}

function wireCanvas() {
  const surface = $("canvas-surface");

  surface.addEventListener("pointerdown", (down) => {
    if (down.target !== surface) return;
    const start = { x: down.clientX, y: down.clientY };
    const startPan = { ...viewport.pan };
    const onMove = (move: PointerEvent) => {
      viewport = {
        ...viewport,
        pan: {
          x: startPan.x + move.clientX - start.x,
          y: startPan.y + move.clientY - start.y,
        },
      };
      render();
    };
    const onUp = () => {
      window.removeEventListener("pointermove", onMove);
      window.removeEventListener("pointerup", onUp);
    };
    window.addEventListener("pointermove", onMove);
    window.addEventListener("pointerup", onUp);
  });

  surface.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.1 : 1 / 1.1;
    viewport = zoomAt(viewport, { x: ev.clientX, y: ev.clientY }, factor);
    render();
  });

  surface.addEventListener("dblclick", (ev) => {
    if (ev.target !== surface) return;
    const point = screenToCanvas({ x: ev.clientX, y: ev.clientY }, viewport);
    guarded(() => api.createWidget(workspace!.id, [point.x, point.y])).then(refresh);
  });

  // drop from panel onto canvas activates the widget
  surface.addEventListener("dragover", (ev) => ev.preventDefault());
  surface.addEventListener("drop", (ev) => {
    ev.preventDefault();
    const id = ev.dataTransfer?.getData("text/widget-id");
    if (!id) return;
    const point = screenToCanvas({ x: ev.clientX, y: ev.clientY }, viewport);
    guarded(() => api.moveWidget(workspace!.id, id, "canvas", [point.x, point.y]))
      .then(refresh);
  });

  $("zoom-in").addEventListener("click", () => {
    viewport = zoomAt(viewport, centerOf(surface), 1.25);
    render();
  });
  $("zoom-out").addEventListener("click", () => {
    viewport = zoomAt(viewport, centerOf(surface), 0.8);
    render();
  });
  $("zoom-reset").addEventListener("click", () => {
    viewport = identityViewport();
    render();
  });
}

function centerOf(el: HTMLElement) {
  const rect = el.getBoundingClientRect();
  return { x: rect.left + rect.width / 2, y: rect.top + rect.height / 2 };
}

function editTitle(w: ControlWidget) {
  const title = window.prompt("Widget title:", w.title);
  if (title === null) return;
  guarded(() => api.updateWidget(workspace!.id, w.id, { title })).then(refresh);
}

// -- streaming ----------------------------------------------------------------

async function runStream(start: () => Promise<string>) {
  const editor = $("editor") as HTMLTextAreaElement;
  const before = editor.value;
  streaming = true;
  editor.value = "";
  render();
  try {
    await start();
  } catch (err) {
    editor.value = before; // server kept the old document; mirror it
    if (err instanceof ApiRequestError) notify(err.message);
  } finally {
    streaming = false;
    await refresh();
  }
}

function wireEditor() {
  const editor = $("editor") as HTMLTextAreaElement;
  editor.addEventListener("input", () => {
    $("word-count").textContent = `${wordCount(editor.value)} words`;
  });
  editor.addEventListener("blur", () => {
    if (!streaming && workspace && editor.value !== workspace.document.content) {
      guarded(() => api.putDocument(workspace!.id, editor.value, false)).then(refresh);
    }
  });

  $("checkpoint").addEventListener("click", () =>
    guarded(() => api.putDocument(workspace!.id, editor.value, true)).then(refresh),
  );

  $("rephrase").addEventListener("click", () =>
    runStream(() =>
      api.rephrase(workspace!.id, {
        onDelta: (text) => {
          editor.value += text;
          $("word-count").textContent = `${wordCount(editor.value)} words`;
        },
      }),
    ),
  );

  $("prompt-run").addEventListener("click", () => {
    const prompt = ($("prompt-input") as HTMLInputElement).value;
    if (!prompt.trim()) return notify("Enter a prompt first");
    runStream(() =>
      api.applyPrompt(workspace!.id, prompt, {
        onDelta: (text) => {
          editor.value += text;
        },
      }),
    );
  });

  ($("history") as HTMLSelectElement).addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    if (value === "") return;
    guarded(() => api.revert(workspace!.id, Number(value))).then(refresh);
  });
}

function wirePanel() {
  $("suggest-widgets").addEventListener("click", () =>
    guarded(() => api.generateWidgets(workspace!.id)).then(refresh),
  );
  $("panel-prompt-run").addEventListener("click", () => {
    const guiding = ($("panel-prompt") as HTMLInputElement).value;
    guarded(() => api.generateWidgets(workspace!.id, guiding || undefined)).then(refresh);
  });
}

function wireMenu() {
  $("ws-new").addEventListener("click", async () => {
    const name = window.prompt("Workspace name:");
    if (!name) return;
    const ws = await guarded(() => api.createWorkspace(name));
    if (ws) {
      workspace = ws;
      render();
    }
  });
  $("ws-rename").addEventListener("click", async () => {
    const name = window.prompt("New name:", workspace?.name ?? "");
    if (!name || !workspace) return;
    await guarded(() => api.renameWorkspace(workspace!.id, name));
    refresh();
  });
  $("ws-duplicate").addEventListener("click", async () => {
    const name = window.prompt("Name for the copy:");
    if (!name || !workspace) return;
    const copy = await guarded(() => api.duplicateWorkspace(workspace!.id, name));
    if (copy) {
      workspace = copy;
      render();
    }
  });
  $("ws-delete").addEventListener("click", async () => {
    if (!workspace || !window.confirm(`Delete "${workspace.name}"?`)) return;
    await guarded(() => api.deleteWorkspace(workspace!.id));
    await openFirstWorkspace();
  });
}

async function openFirstWorkspace() {
  const summaries = await api.listWorkspaces();
  if (summaries.length === 0) {
    workspace = await api.createWorkspace("My Canvas");
  } else {
    workspace = await api.getWorkspace(summaries[0].id);
  }
  render();
}

export async function start() {
  wireCanvas();
  wireEditor();
  wirePanel();
  wireMenu();
  await guarded(openFirstWorkspace);
}

if (typeof document !== "undefined" && document.getElementById("canvas-surface")) {
  void start();
}
