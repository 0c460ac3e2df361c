#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus under tests/fixtures/.

corpus/   40 pre-parsed two-class documents (32 train, 8 test), manifest and
          a 16-d embeddings file
mini/     3 documents for stage tests, plus a manifest that also lists a
          document with a broken dependency
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

FILLER = ("the a of movie film story plot it was and this with to scene "
          "actor cast time one some really quite very").split()
CUES = {
    0: "good great excellent wonderful charming superb".split(),
    1: "bad awful dull boring terrible weak".split(),
}
OOV = "zorbl quuxian frimp".split()


def sentence(rng, label, first_id, sent_idx):
    n = rng.randint(5, 9)
    words = [rng.choice(FILLER) for _ in range(n)]
    for _ in range(rng.randint(1, 2)):
        words[rng.randrange(n)] = rng.choice(CUES[label])
    if rng.random() < 0.3:
        words[rng.randrange(n)] = rng.choice(OOV)
    ids = list(range(first_id, first_id + n))
    root = rng.choice(ids)
    deps = []
    attached = [root]
    for t in ids:
        if t == root:
            continue
        head = rng.choice(attached)
        deps.append({"head": head, "dependent": t, "relation": "dep"})
        attached.append(t)
    tokens = [{"id": t, "text": w, "sentence": sent_idx} for t, w in zip(ids, words)]
    return tokens, deps, root


def document(rng, doc_id, label, sentences):
    tokens, deps, roots = [], [], []
    for s in range(sentences):
        tk, dp, root = sentence(rng, label, len(tokens), s)
        tokens += tk
        deps += dp
        roots.append(root)
    return {"doc_id": doc_id, "label": label, "tokens": tokens,
            "dependencies": deps, "sentence_roots": roots}


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def dump(obj):
    return json.dumps(obj, separators=(",", ":")) + "\n"


def main():
    rng = random.Random(20240517)

    corpus = ROOT / "corpus"
    manifest = []
    for i in range(40):
        label = i % 2
        doc_id = f"doc{i:02d}"
        doc = document(rng, doc_id, label, rng.randint(2, 3))
        write(corpus / "docs" / f"{doc_id}.json", dump(doc))
        split = "test" if i >= 32 else "train"
        manifest.append({"doc_id": doc_id, "split": split, "path": f"docs/{doc_id}.json"})
    write(corpus / "manifest.jsonl", "".join(dump(m) for m in manifest))

    vocab = FILLER + CUES[0] + CUES[1]
    lines = []
    for w in vocab:
        vec = [rng.uniform(-1, 1) for _ in range(16)]
        lines.append(w + " " + " ".join(f"{v:.6f}" for v in vec))
    write(corpus / "embeddings.txt", "\n".join(lines) + "\n")

    mini = ROOT / "mini"
    entries = []
    for i in range(3):
        doc_id = f"m{i}"
        doc = document(rng, doc_id, i % 2, 2)
        write(mini / "docs" / f"{doc_id}.json", dump(doc))
        entries.append({"doc_id": doc_id, "split": "train", "path": f"docs/{doc_id}.json"})
    write(mini / "manifest.jsonl", "".join(dump(m) for m in entries))

    broken = document(rng, "bad", 0, 2)
    broken["dependencies"].append({"head": 0, "dependent": 99, "relation": "dep"})
    write(mini / "docs" / "bad.json", dump(broken))
    with_bad = entries + [{"doc_id": "bad", "split": "train", "path": "docs/bad.json"},
                          {"doc_id": "gone", "split": "test", "path": "docs/gone.json"}]
    write(mini / "manifest_partial.jsonl", "".join(dump(m) for m in with_bad))


if __name__ == "__main__":
    main()
