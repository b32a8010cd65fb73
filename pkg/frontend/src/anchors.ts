// Anchor picker: upload a replacement anchor image for a class and
// surface the resulting profile staleness until recalibration.

import { Api, ApiError, ClassRow } from "./api.js";

const IMAGE_EXTENSIONS = [".png", ".jpg", ".jpeg", ".gif", ".bmp", ".webp"];

/** Reject obvious non-images before any bytes leave the browser. */
export function isImageFile(file: { type?: string; name: string }): boolean {
  if (file.type) {
    return file.type.startsWith("image/");
  }
  const name = file.name.toLowerCase();
  return IMAGE_EXTENSIONS.some((ext) => name.endsWith(ext));
}

export function staleBadge(row: ClassRow): boolean {
  return row.profile_stale;
}

export interface AnchorUploadOutcome {
  ok: boolean;
  message: string;
  profileStale: boolean;
}

export async function uploadAnchor(
  api: Api,
  className: string,
  file: { name: string; type?: string; arrayBuffer(): Promise<ArrayBuffer> },
): Promise<AnchorUploadOutcome> {
  if (!isImageFile(file)) {
    return { ok: false, message: `${file.name} is not an image file`, profileStale: false };
  }
  try {
    const receipt = await api.putAnchor(className, await file.arrayBuffer());
    const message = receipt.changed
      ? `anchor replaced (${receipt.sha.slice(0, 8)})`
      : "anchor unchanged (same content)";
    return { ok: true, message, profileStale: receipt.profile_stale };
  } catch (exc) {
    const message = exc instanceof ApiError ? exc.message : "upload failed, try again";
    return { ok: false, message, profileStale: false };
  }
}

export function renderClassRow(row: ClassRow): HTMLTableRowElement {
  const tr = document.createElement("tr");
  tr.dataset.class = row.class;
  const name = document.createElement("td");
  name.textContent = row.class;
  const anchor = document.createElement("td");
  anchor.textContent = row.anchor ? "✓" : "—";
  const profile = document.createElement("td");
  profile.textContent = row.profile ? "✓" : "—";
  if (staleBadge(row)) {
    const badge = document.createElement("span");
    badge.className = "stale-badge";
    badge.textContent = "stale";
    profile.appendChild(badge);
  }
  tr.append(name, anchor, profile);
  return tr;
}
