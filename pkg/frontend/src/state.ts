// Server-owned domain shapes and the pure view-state derivations.

export type Zone = "panel" | "canvas";

export interface ControlWidget {
  id: string;
  title: string;
  value: string;
  options: string[];
  zone: Zone;
  position: [number, number] | null;
  size: [number, number];
  fresh: boolean;
  origin: "suggested" | "prompted" | "manual";
}

export interface Revision {
  text: string;
  cause: string;
  timestamp: string;
  source_revision: number | null;
}

export interface DocumentState {
  content: string;
  history: Revision[];
}

export interface Workspace {
  id: string;
  name: string;
  widgets: ControlWidget[];
  document: DocumentState;
  viewport: { pan: [number, number]; zoom: number };
  created_at: string;
  modified_at: string;
}

export interface WorkspaceSummary {
  id: string;
  name: string;
  widget_count: number;
  created_at: string;
  modified_at: string;
}

/** Widgets glow while fresh in the panel and turn active on the canvas. */
export type VisualState = "inactive" | "active" | "fresh";

export function widgetVisualState(w: Pick<ControlWidget, "zone" | "fresh">): VisualState {
  if (w.zone === "panel" && w.fresh) return "fresh";
  if (w.zone === "canvas") return "active";
  return "inactive";
}

/** Canvas widgets with nonempty trimmed title and value, in creation order. */
export function activePairs(widgets: ControlWidget[]): Array<[string, string]> {
  return widgets
    .filter((w) => w.zone === "canvas" && w.title.trim() !== "" && w.value.trim() !== "")
    .map((w): [string, string] => [w.title.trim(), w.value.trim()]);
}

export function rephraseEnabled(widgets: ControlWidget[]): boolean {
  return activePairs(widgets).length > 0;
}

export function wordCount(text: string): number {
  const trimmed = text.trim();
  return trimmed === "" ? 0 : trimmed.split(/\s+/).length;
}
