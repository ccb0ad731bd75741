/**
 * WordPiece tokenization with the shared sequence contract: [CLS] first,
 * greedy longest-match sub-words ('##' continuations), '!"/"?' as standalone
 * tokens, truncation to 128 ids, zero padding.
 */

export const PAD_ID = 0;
export const CLS_ID = 1;
export const UNK_ID = 2;
export const MAX_SEQUENCE_LENGTH = 128;

export interface TokenSequence {
  ids: Int32Array; // length 128
  attentionLength: number;
}

export class Vocabulary {
  readonly tokens: string[];
  private readonly index: Map<string, number>;

  constructor(tokens: string[]) {
    if (tokens.length < 3 || tokens[0] !== "[PAD]" || tokens[1] !== "[CLS]" || tokens[2] !== "[UNK]") {
      throw new Error("vocabulary must start with [PAD], [CLS], [UNK]");
    }
    this.tokens = tokens;
    this.index = new Map();
    tokens.forEach((token, id) => {
      if (this.index.has(token)) throw new Error(`duplicate vocabulary token ${token}`);
      this.index.set(token, id);
    });
  }

  get size(): number {
    return this.tokens.length;
  }

  lookup(token: string): number | undefined {
    return this.index.get(token);
  }
}

function wordpiece(word: string, vocab: Vocabulary): number[] {
  const pieces: number[] = [];
  let start = 0;
  while (start < word.length) {
    let end = word.length;
    let pieceId: number | undefined;
    while (end > start) {
      const candidate = start === 0 ? word.slice(start, end) : "##" + word.slice(start, end);
      pieceId = vocab.lookup(candidate);
      if (pieceId !== undefined) break;
      end -= 1;
    }
    if (pieceId === undefined) return [UNK_ID];
    pieces.push(pieceId);
    start = end;
  }
  return pieces;
}

const WORD_RE = /[!?]|[^!?\s]+/g;

export function tokenize(text: string, vocab: Vocabulary): TokenSequence {
  const ids: number[] = [CLS_ID];
  for (const word of text.match(WORD_RE) ?? []) {
    ids.push(...wordpiece(word, vocab));
    if (ids.length >= MAX_SEQUENCE_LENGTH) break;
  }
  const clipped = ids.slice(0, MAX_SEQUENCE_LENGTH);
  const out = new Int32Array(MAX_SEQUENCE_LENGTH); // zero-filled = [PAD]
  out.set(clipped);
  return { ids: out, attentionLength: clipped.length };
}
