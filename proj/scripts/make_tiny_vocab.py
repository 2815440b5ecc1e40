"""Builds a small byte-level BPE vocabulary in the CLIP file layout and
freezes reference token ids produced by the transformers CLIP tokenizer.

Outputs (in tests/data/tokenizer/):
  vocab.json, merges.txt   tokenizer files
  expected.json            {"cases": [{"text", "ids"}], ...}
"""

import argparse
import collections
import json
import pathlib
import re

CORPUS = """
a picture of a person a picture of a male person a picture of a person with hat
a picture of a person with goatee blond hair bangs eyeglasses necktie gray hair
a picture of a person who is smiling a picture of a bald person big lips lipstick
pointy nose big nose a picture of an attractive person rosy cheeks high cheekbones
bags under eyes narrow eyes no beard a picture of a man a picture of a woman
a picture of a haired person who is serious pale skin tanned skin a young person
an aged person straight hair wavy hair an unattractive person
five o clock shadow arched eyebrows black hair blurry brown hair bushy eyebrows
chubby double chin heavy makeup mouth slightly open mustache oval face receding
hairline sideburns wearing earrings wearing necklace the quick brown fox
"""

SPECIAL = ["<|startoftext|>", "<|endoftext|>"]
NUM_MERGES = 400

CASES = [
    "A picture of a person",
    "A picture of a male person",
    "A picture of a person with hat",
    "A picture of a person who is smiling",
    "A picture of an unattractive person",
    "  Multiple   spaces\tand\nnewlines  ",
    "UPPER case Words",
    "it's a person's hat, isn't it?",
    "they're we've I'm you'll he'd",
    "numbers 2024 and 7",
    "punctuation!!! ... ?? ,;:",
    "hyphen-ated and slash/ed",
    "zebra quixotic jukebox",
    "x",
]
LONG = " ".join(["picture"] * 100)


def bytes_to_unicode():
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(0xA1, 0xAC + 1)) + list(range(0xAE, 0xFF + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


def learn_merges(corpus, count):
    enc = bytes_to_unicode()
    words = collections.Counter(re.findall(r"[a-z]+", corpus.lower()))
    splits = {}
    for w in words:
        symbols = [enc[b] for b in w.encode("utf-8")]
        symbols[-1] += "</w>"
        splits[w] = symbols
    merges = []
    for _ in range(count):
        pairs = collections.Counter()
        for w, freq in words.items():
            s = splits[w]
            for i in range(len(s) - 1):
                pairs[(s[i], s[i + 1])] += freq
        if not pairs:
            break
        best = max(pairs.items(), key=lambda kv: (kv[1], kv[0]))[0]
        merges.append(best)
        for w in words:
            s = splits[w]
            out = []
            i = 0
            while i < len(s):
                if i + 1 < len(s) and (s[i], s[i + 1]) == best:
                    out.append(s[i] + s[i + 1])
                    i += 2
                else:
                    out.append(s[i])
                    i += 1
            splits[w] = out
    return merges


def build_vocab(merges):
    base = list(bytes_to_unicode().values())
    tokens = base + [t + "</w>" for t in base] + ["".join(m) for m in merges] + SPECIAL
    vocab = {}
    for t in tokens:
        vocab.setdefault(t, len(vocab))
    return vocab


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "tokenizer")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    merges = learn_merges(CORPUS, NUM_MERGES)
    vocab = build_vocab(merges)
    (out / "vocab.json").write_text(json.dumps(vocab, ensure_ascii=False, indent=0), encoding="utf-8")
    with open(out / "merges.txt", "w", encoding="utf-8") as f:
        f.write("#version: 0.2\n")
        for a, b in merges:
            f.write(f"{a} {b}\n")

    from transformers import CLIPTokenizer

    tok = CLIPTokenizer(str(out / "vocab.json"), str(out / "merges.txt"))
    cases = [{"text": t, "ids": tok(t)["input_ids"]} for t in CASES]
    long_ids = tok(LONG, truncation=True, max_length=77)["input_ids"]
    expected = {
        "start_id": vocab["<|startoftext|>"],
        "end_id": vocab["<|endoftext|>"],
        "vocab_size": len(vocab),
        "cases": cases,
        "truncated": {"text": LONG, "ids": long_ids},
    }
    (out / "expected.json").write_text(json.dumps(expected, indent=1), encoding="utf-8")
    print(f"vocab {len(vocab)} tokens, {len(merges)} merges, {len(cases)} cases")


if __name__ == "__main__":
    main()
