/** Raster export of whatever the canvas currently shows. */

export interface RasterSource {
  toDataURL(type: string): string;
}

export function canvasPngDataUrl(canvas: RasterSource): string {
  const url = canvas.toDataURL("image/png");
  if (!url || !url.startsWith("data:image/png")) {
    throw new Error("canvas produced no raster");
  }
  return url;
}

export function downloadDataUrl(url: string, filename: string, doc: Document = document): void {
  const anchor = doc.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  doc.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
}

export function downloadText(text: string, filename: string, doc: Document = document): void {
  const blob = new Blob([text], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  try {
    downloadDataUrl(url, filename, doc);
  } finally {
    URL.revokeObjectURL(url);
  }
}
