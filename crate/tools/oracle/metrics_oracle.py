#!/usr/bin/env python3
"""Reference computation of the golden metric values.

Reads golden_docs.json (documents plus hand-annotated values for the
linguistic metrics) and writes golden_metrics.json with all 24 metrics per
document. The mechanical metrics are recomputed here from the documented
rules with no shared code; the heuristic ones (named entities, modifiers,
subordinate clauses, incomplete sentences, unresolved references, code
descriptions) are taken from the hand annotations.

Usage: metrics_oracle.py <fixtures dir> <assets dir>
"""

import json
import math
import re
import sys
from pathlib import Path

WORD = r"[^\W]+(?:['’.\-][^\W]+)*"
URL = r"https?://[^\s)\]}>]*[^\s)\]}>.,;:!?]"
TOKEN = re.compile(rf"\[CODE\]|\[ERROR\]|(?P<url>{URL})|(?P<word>{WORD})|\S")
URL_RE = re.compile(URL)

HAND = [
    "named_entities",
    "modifiers",
    "subordinate_clauses",
    "incomplete_sentences",
    "unresolved_references",
    "code_descriptions",
]


def lexicon(path):
    single, multi = set(), []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words = line.lower().split()
        if len(words) == 1:
            single.add(words[0])
        else:
            multi.append(words)
    return single, multi


def count_matches(seq, lex):
    """Greedy, longest-first, non-overlapping matches."""
    single, multi = lex
    multi = sorted(multi, key=len, reverse=True)
    i = n = 0
    while i < len(seq):
        hit = next((len(m) for m in multi if seq[i:i + len(m)] == m), 0)
        if not hit and seq[i] in single:
            hit = 1
        if hit:
            n += 1
            i += hit
        else:
            i += 1
    return n


def tokens(text):
    out = []
    for m in TOKEN.finditer(text):
        s = m.group(0)
        if m.group("url") or s in ("[CODE]", "[ERROR]"):
            kind = "code"
        elif m.group("word"):
            kind = "word" if any(c.isalpha() for c in s) else "number"
        else:
            kind = "punct"
        out.append((s, s.lower().replace("’", "'"), kind))
    return out


def error_patterns(path):
    return [re.compile(l) for l in Path(path).read_text().splitlines() if l.strip() and not l.startswith("#")]


def segment(raw, patterns):
    """Return prose (with placeholders), snippet texts and error count.

    Only the constructs used by the golden documents are handled: fenced
    blocks and an unfenced traceback run.
    """
    lines = raw.split("\n")
    prose, snippets, errors = [], [], 0
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.strip().startswith("```"):
            j = i + 1
            while j < len(lines) and not lines[j].strip().startswith("```"):
                j += 1
            body = "\n".join(lines[i + 1:j])
            snippets.append(body)
            prose.append("[CODE]")
            i = j + 1
            continue
        if any(p.search(line) for p in patterns):
            j = i
            while j + 1 < len(lines) and (
                lines[j + 1].startswith((" ", "\t")) or any(p.search(lines[j + 1]) for p in patterns)
            ):
                j += 1
            errors += 1
            prose.append("[ERROR]")
            i = j + 1
            continue
        prose.append(line)
        i += 1
    return "\n".join(prose), snippets, errors


def sentences(prose):
    """Split at . ! ? followed by whitespace and an uppercase letter, and at newlines."""
    out = []
    for line in prose.split("\n"):
        for part in re.split(r"(?<=[.!?])\s+(?=[A-Z\[])", line):
            if part.strip():
                out.append(part.strip())
    return out


def syllables(word):
    letters = [c for c in word.lower() if c.isalpha()]
    groups, prev = 0, False
    for c in letters:
        v = c in "aeiouy"
        if v and not prev:
            groups += 1
        prev = v
    if letters and letters[-1] == "e" and groups > 1:
        groups -= 1
    return max(groups, 1)


def repeated(seq, n):
    counts = {}
    for i in range(len(seq) - n + 1):
        g = tuple(seq[i:i + n])
        counts[g] = counts.get(g, 0) + 1
    return sum(1 for c in counts.values() if c >= 2)


def identifier_like(s):
    return "_" in s or "." in s or any(c.isupper() for c in s[1:]) or (
        any(c.isalpha() for c in s) and any(c.isdigit() for c in s)
    )


def in_dictionary(w, dictionary):
    if w in dictionary:
        return True
    for suffix in ("'s", "'"):
        if w.endswith(suffix) and w[: -len(suffix)] in dictionary:
            return True
    return "-" in w and all(p in dictionary for p in w.split("-"))


def compute(doc, lex, patterns):
    prompts = doc["prompts"]
    totals = dict.fromkeys(
        ["software_terms", "constraints", "repeated_2grams", "repeated_3grams", "unique_words", "words",
         "sentences", "misspellings", "urls", "error_messages"], 0)
    all_snippets, all_words, prose_sentences = [], [], []
    first_len = None
    for p in prompts:
        prose, snippets, errors = segment(p, patterns)
        toks = tokens(prose)
        norm = [t[1] for t in toks]
        kept = [t[1] for t in toks if t[2] != "punct"]
        words = [t for t in toks if t[2] == "word"]
        sents = [s for s in sentences(prose) if any(t[2] == "word" for t in tokens(s))]
        totals["software_terms"] += count_matches(norm, lex["se_terms"])
        totals["constraints"] += sum(count_matches([t[1] for t in tokens(s)], lex["constraints"]) for s in sentences(prose))
        totals["repeated_2grams"] += repeated(kept, 2)
        totals["repeated_3grams"] += repeated(kept, 3)
        totals["unique_words"] += len({w[1] for w in words})
        totals["words"] += len(words)
        totals["sentences"] += len(sents)
        totals["misspellings"] += sum(
            1 for s, n, _ in words
            if not identifier_like(s) and n not in lex["se_terms"][0] and not in_dictionary(n, lex["dictionary"])
        )
        totals["urls"] += len(URL_RE.findall(p))
        totals["error_messages"] += errors
        if first_len is None:
            first_len = len(words)
        all_snippets += snippets
        all_words += [w[1] for w in words]
        prose_sentences += sents

    out = dict(totals)
    out["code_snippets"] = len(all_snippets)
    out["mean_snippet_size"] = (sum(len(s) for s in all_snippets) / len(all_snippets)) if all_snippets else 0.0
    out["first_prompt_length"] = first_len
    out["total_prompt_count"] = len(prompts)
    out["unique_info"] = len(set(all_words)) / max(len(all_words), 1)

    words = [t[0] for s in prose_sentences for t in tokens(s) if t[2] == "word"]
    syl = [syllables(w) for w in words]
    n_s = len(prose_sentences)
    if n_s == 0 or not words:
        out["flesch"] = 0.0
    else:
        out["flesch"] = 206.835 - 1.015 * len(words) / n_s - 84.6 * sum(syl) / len(words)
    poly = sum(1 for s in syl if s >= 3)
    out["smog"] = 0.0 if n_s == 0 else 1.0430 * math.sqrt(poly * 30 / n_s) + 3.1291

    stop = lex["stopwords"][0]

    def content(s):
        return {t[1] for t in tokens(s) if t[2] == "word" and t[1] not in stop}

    if n_s < 2:
        out["entailment"] = 0.5
    else:
        scores = []
        for a, b in zip(prose_sentences, prose_sentences[1:]):
            ca, cb = content(a), content(b)
            union = ca | cb
            scores.append(0.0 if not union else min(1.0, 2 * len(ca & cb) / len(union)))
        out["entailment"] = sum(scores) / len(scores)

    for k in HAND:
        out[k] = doc["hand"][k]
    return out


def main():
    fixtures, assets = Path(sys.argv[1]), Path(sys.argv[2])
    lex = {
        name: lexicon(assets / "lexicons" / f"{name}.txt")
        for name in ["se_terms", "constraints", "stopwords", "dictionary"]
    }
    lex["dictionary"] = lex["dictionary"][0]
    patterns = error_patterns(assets / "patterns" / "errors.txt")
    docs = json.loads((fixtures / "golden_docs.json").read_text())
    golden = [{"id": d["id"], "prompts": d["prompts"], "metrics": compute(d, lex, patterns)} for d in docs]
    (fixtures / "golden_metrics.json").write_text(json.dumps(golden, indent=2) + "\n")


if __name__ == "__main__":
    main()
