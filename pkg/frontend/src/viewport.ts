// Infinite-canvas coordinate algebra. Widget positions live in canvas
// units so they are zoom-invariant; the viewport maps them to the screen.

export interface Point {
  x: number;
  y: number;
}

export interface Viewport {
  pan: Point;
  zoom: number;
}

export const MIN_ZOOM = 0.1;
export const MAX_ZOOM = 4.0;

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}

export function identityViewport(): Viewport {
  return { pan: { x: 0, y: 0 }, zoom: 1 };
}

export function screenToCanvas(p: Point, v: Viewport): Point {
  return { x: (p.x - v.pan.x) / v.zoom, y: (p.y - v.pan.y) / v.zoom };
}

export function canvasToScreen(p: Point, v: Viewport): Point {
  return { x: p.x * v.zoom + v.pan.x, y: p.y * v.zoom + v.pan.y };
}

export function panBy(v: Viewport, dx: number, dy: number): Viewport {
  return { pan: { x: v.pan.x + dx, y: v.pan.y + dy }, zoom: v.zoom };
}

/**
 * Zoom toward an anchor point in screen coordinates: the canvas point
 * under the anchor stays under the anchor after the zoom.
 */
export function zoomAt(v: Viewport, anchorScreen: Point, factor: number): Viewport {
  if (factor <= 0) throw new RangeError("zoom factor must be positive");
  const zoom = clampZoom(v.zoom * factor);
  const anchorCanvas = screenToCanvas(anchorScreen, v);
  return {
    zoom,
    pan: {
      x: anchorScreen.x - anchorCanvas.x * zoom,
      y: anchorScreen.y - anchorCanvas.y * zoom,
    },
  };
}
