/**
 * Transcript cleanup, mirroring the Python pipeline exactly: drop @handles
 * and URLs, keep alphanumerics/whitespace/'!'/'?', lowercase, collapse
 * whitespace. Idempotent.
 */

const URL_RE = /(?:https?:\/\/|www\.)\S+/g;
const HANDLE_RE = /@\w+/g;
const KEEP_RE = /[\p{L}\p{N}!?\s]/u;

export function preprocessText(raw: string): string {
  let text = raw.toLowerCase();
  text = text.replace(URL_RE, " ");
  text = text.replace(HANDLE_RE, " ");
  let kept = "";
  for (const ch of text) {
    if (KEEP_RE.test(ch)) kept += ch;
  }
  return kept.split(/\s+/).filter(Boolean).join(" ");
}
