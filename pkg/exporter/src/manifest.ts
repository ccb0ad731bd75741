/** Minimal RFC-4180 CSV parsing and manifest loading (id + transcript). */

import { readFileSync } from "node:fs";

export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = "";
  let quoted = false;
  let i = 0;
  while (i < text.length) {
    const ch = text[i];
    if (quoted) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
        i += 1;
        continue;
      }
      field += ch;
      i += 1;
      continue;
    }
    if (ch === '"') {
      quoted = true;
      i += 1;
    } else if (ch === ",") {
      row.push(field);
      field = "";
      i += 1;
    } else if (ch === "\n" || ch === "\r") {
      if (ch === "\r" && text[i + 1] === "\n") i += 1;
      row.push(field);
      rows.push(row);
      row = [];
      field = "";
      i += 1;
    } else {
      field += ch;
      i += 1;
    }
  }
  if (field.length > 0 || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows;
}

export interface ManifestRow {
  id: string;
  transcript: string;
}

export function loadManifest(path: string): ManifestRow[] {
  const rows = parseCsv(readFileSync(path, "utf-8"));
  if (rows.length === 0) throw new Error(`${path}: empty manifest`);
  const header = rows[0];
  const idCol = header.indexOf("id");
  const transcriptCol = header.indexOf("transcript");
  if (idCol < 0 || transcriptCol < 0) {
    throw new Error(`${path}: manifest needs 'id' and 'transcript' columns`);
  }
  const records: ManifestRow[] = [];
  const seen = new Set<string>();
  const missing: string[] = [];
  for (const row of rows.slice(1)) {
    if (row.length === 1 && row[0] === "") continue; // trailing newline
    const id = (row[idCol] ?? "").trim();
    if (!id) throw new Error(`${path}: row with empty id`);
    if (seen.has(id)) throw new Error(`${path}: duplicate id ${id}`);
    seen.add(id);
    const transcript = row[transcriptCol] ?? "";
    if (transcript.trim() === "") missing.push(id);
    records.push({ id, transcript });
  }
  if (missing.length > 0) {
    throw new Error(`${path}: missing transcript for id(s): ${missing.join(", ")}`);
  }
  return records;
}
