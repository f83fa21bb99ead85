/**
 * Scoring backends. The service dispatches every op through this interface,
 * so model-backed implementations (an embedding encoder for similarity, a
 * causal LM for perplexity, a trained classifier for importance, a seq2seq
 * rewriter) drop in behind the same four methods without touching the
 * protocol layer. The two built-ins are model-free:
 *
 *  - echo: the fixed deterministic contract integration tests rely on;
 *  - lexical: cheap text heuristics, useful as a smoke backend.
 */

export interface Backend {
  semanticSimilarity(a: string, b: string): number;
  perplexity(text: string): number;
  importance(window: string): number;
  rewrite(source: string): string;
}

export const ECHO_PERPLEXITY = 50.0;
export const ECHO_IMPORTANCE = 0.5;

/** Deterministic test backend: 1.0 for identical strings else 0.5, constants elsewhere, identity rewrite. */
export class EchoBackend implements Backend {
  semanticSimilarity(a: string, b: string): number {
    return a === b ? 1.0 : 0.5;
  }

  perplexity(_text: string): number {
    return ECHO_PERPLEXITY;
  }

  importance(_window: string): number {
    return ECHO_IMPORTANCE;
  }

  rewrite(source: string): string {
    return source;
  }
}

function trigramCounts(text: string): Map<string, number> {
  const counts = new Map<string, number>();
  const grams = text.length < 3 ? [text] : [];
  for (let i = 0; i + 3 <= text.length; i++) {
    grams.push(text.slice(i, i + 3));
  }
  for (const gram of grams) {
    counts.set(gram, (counts.get(gram) ?? 0) + 1);
  }
  return counts;
}

/** Heuristic, deterministic backend: trigram cosine, self-entropy perplexity, length-damped importance, rule rewrite. */
export class LexicalBackend implements Backend {
  semanticSimilarity(a: string, b: string): number {
    const ca = trigramCounts(a);
    const cb = trigramCounts(b);
    let dot = 0;
    let sqA = 0;
    let sqB = 0;
    for (const [gram, count] of ca) {
      sqA += count * count;
      const other = cb.get(gram);
      if (other !== undefined) dot += count * other;
    }
    for (const count of cb.values()) sqB += count * count;
    if (sqA === 0 || sqB === 0) return 0;
    return dot / Math.sqrt(sqA * sqB);
  }

  /** Perplexity of the text under its own empirical character distribution. */
  perplexity(text: string): number {
    const chars = [...text].filter((c) => !/\s/.test(c));
    if (chars.length === 0) return 1.0;
    const counts = new Map<string, number>();
    for (const c of chars) counts.set(c, (counts.get(c) ?? 0) + 1);
    let logSum = 0;
    for (const c of chars) {
      logSum += Math.log((counts.get(c) ?? 1) / chars.length);
    }
    return Math.exp(-logSum / chars.length);
  }

  importance(window: string): number {
    const tokens = window.split(/\s+/).filter(Boolean);
    const distinct = new Set(tokens).size;
    return distinct / (distinct + 8);
  }

  rewrite(source: string): string {
    const match = /^(\d{1,3})'\s*(.*)$/.exec(source);
    let text = source;
    if (match) {
      const minute = Number(match[1]);
      text = `In the ${minute}${ordinalSuffix(minute)} minute, ${match[2]}`;
    }
    text = text.replace(/[!！]+/g, ".").replace(/\.{2,}/g, ".").trim();
    if (text && !/[.。?？…]$/.test(text)) text += ".";
    return text || source;
  }
}

function ordinalSuffix(n: number): string {
  const mod100 = n % 100;
  if (mod100 >= 10 && mod100 <= 20) return "th";
  switch (n % 10) {
    case 1:
      return "st";
    case 2:
      return "nd";
    case 3:
      return "rd";
    default:
      return "th";
  }
}

export function makeBackend(name: string): Backend {
  switch (name) {
    case "echo":
      return new EchoBackend();
    case "lexical":
      return new LexicalBackend();
    default:
      throw new Error(`unknown backend ${JSON.stringify(name)} (expected echo or lexical)`);
  }
}
