#!/usr/bin/env python3
"""Regenerates data/tagged_sample.jsonl, the bundled gold corpus used for
tagger training and tests. Deterministic for a fixed seed."""

import json
import random

NOUNS = [
    "cat", "dog", "house", "tree", "river", "city", "garden", "book", "story",
    "film", "movie", "review", "summary", "market", "company", "report",
    "teacher", "student", "doctor", "engineer", "mountain", "village", "road",
    "bridge", "window", "door", "table", "chair", "plan", "idea", "problem",
    "answer", "question", "mat", "bird", "horse", "farmer", "meeting", "letter",
    "paper", "result", "project", "team", "leader", "child", "friend", "game",
]
PLURALS = [
    "cats", "dogs", "houses", "trees", "rivers", "cities", "gardens", "books",
    "stories", "films", "movies", "reviews", "markets", "companies", "reports",
    "teachers", "students", "doctors", "engineers", "mountains", "villages",
    "roads", "bridges", "windows", "doors", "tables", "chairs", "plans",
    "ideas", "problems", "answers", "questions", "birds", "horses", "farmers",
    "meetings", "letters", "papers", "results", "projects", "teams", "children",
    "friends", "games",
]
PROPER = ["Alice", "Bob", "Carol", "David", "Emma", "Frank", "Boston", "Paris",
          "London", "Madrid", "Oslo", "Tokyo"]
ADJS = ["old", "new", "small", "large", "quiet", "busy", "bright", "dark",
        "quick", "slow", "happy", "tired", "famous", "local", "recent",
        "careful", "simple", "serious", "friendly", "narrow", "wide", "clean"]
ADJS_COMP = ["older", "newer", "smaller", "larger", "quicker", "slower"]
VBD = ["sat", "walked", "visited", "opened", "closed", "finished", "started",
       "watched", "described", "wrote", "read", "built", "painted", "moved",
       "carried", "followed", "crossed", "reached", "remembered", "enjoyed"]
VBZ = ["sits", "walks", "visits", "opens", "closes", "finishes", "starts",
       "watches", "describes", "writes", "reads", "builds", "paints", "moves",
       "carries", "follows", "crosses", "reaches", "remembers", "enjoys"]
VB = ["sit", "walk", "visit", "open", "close", "finish", "start", "watch",
      "describe", "write", "read", "build", "paint", "move", "carry",
      "follow", "cross", "reach", "remember", "enjoy"]
VBG = ["sitting", "walking", "visiting", "opening", "closing", "finishing",
       "starting", "watching", "writing", "reading", "building", "painting"]
VBN = ["written", "read", "built", "painted", "moved", "carried", "followed",
       "crossed", "reached", "remembered", "finished", "watched"]
# ambiguous noun/verb forms: tag depends on context
AMBIG = ["play", "work", "walk", "visit", "report", "plan", "answer", "move",
         "start", "watch"]
AMBIG_PL = ["plays", "works", "walks", "visits", "reports", "plans",
            "answers", "moves", "starts", "watches"]
INS = ["on", "in", "under", "near", "behind", "beside", "across", "through",
       "over", "after", "before", "with", "without", "about"]
DTS = ["the", "a", "an", "this", "that", "every", "each", "some"]
RBS = ["quickly", "slowly", "quietly", "carefully", "often", "always",
       "never", "almost", "soon", "again"]
MDS = ["will", "can", "must", "should", "may", "might"]
PRPS = ["he", "she", "it", "they", "we", "I", "you"]
PRPD = ["his", "her", "its", "their", "our", "my", "your"]
CCS = ["and", "but", "or"]
WRB = ["when", "where", "while"]  # while is IN, handled separately
CDS = ["one", "two", "three", "four", "five", "ten", "twenty", "45", "60",
       "100", "1999", "2020"]


def np(r, plural=False):
    """Determiner phrase; returns list of (token, tag)."""
    kind = r.random()
    if kind < 0.12:
        return [(r.choice(PROPER), "NNP")]
    if kind < 0.24:
        return [(r.choice(PRPS), "PRP")]
    out = []
    det = r.choice(DTS)
    if plural and det in ("a", "an", "this", "that", "every", "each"):
        det = "the"
    out.append((det, "DT"))
    if r.random() < 0.55:
        out.append((r.choice(ADJS), "JJ"))
        if r.random() < 0.2:
            out.append((r.choice(ADJS), "JJ"))
    if plural:
        out.append((r.choice(PLURALS), "NNS"))
    elif r.random() < 0.18:
        out.append((r.choice(AMBIG), "NN"))  # ambiguous form in noun slot
    else:
        out.append((r.choice(NOUNS), "NN"))
    return out


def pp(r):
    return [(r.choice(INS), "IN")] + np(r, plural=r.random() < 0.3)


def vp(r, plural=False):
    kind = r.random()
    if kind < 0.30:
        out = [(r.choice(VBD), "VBD")]
    elif kind < 0.45:
        out = [(r.choice(VBZ if not plural else AMBIG_PL),
                "VBZ" if not plural else "VBP")]
        if plural:
            # plural subject takes base-form agreement; use ambiguous verbs
            out = [(r.choice(AMBIG), "VBP")]
    elif kind < 0.60:
        out = [(r.choice(MDS), "MD"), (r.choice(VB + AMBIG), "VB")]
    elif kind < 0.72:
        out = [("was", "VBD"), (r.choice(VBG), "VBG")]
    elif kind < 0.84:
        out = [("was", "VBD"), (r.choice(VBN), "VBN")]
    else:
        out = [(r.choice(VBD), "VBD"), (r.choice(RBS), "RB")]
    if r.random() < 0.6:
        out += np(r, plural=r.random() < 0.3)
    if r.random() < 0.5:
        out += pp(r)
    return out


def sentence(r):
    out = []
    if r.random() < 0.12:
        out += [(r.choice(RBS), "RB"), (",", ",")]
    plural = r.random() < 0.3
    out += np(r, plural=plural)
    out += vp(r, plural=plural)
    if r.random() < 0.18:
        out += [(",", ","), (r.choice(CCS), "CC")] + np(r) + vp(r)
    if r.random() < 0.12:
        out += [(r.choice(INS), "IN"), (r.choice(CDS), "CD"),
                (r.choice(PLURALS), "NNS")]
    if r.random() < 0.08:
        out += [("'s", "POS")]  # keep POS tag in circulation
    out.append((".", "."))
    return out


def fixed_sentences():
    """A few hand-written sentences pinning specific constructions."""
    return [
        [("the", "DT"), ("cat", "NN"), ("sat", "VBD"), ("on", "IN"),
         ("the", "DT"), ("mat", "NN"), (".", ".")],
        [("the", "DT"), ("dog", "NN"), ("sat", "VBD"), ("on", "IN"),
         ("the", "DT"), ("rug", "NN"), (".", ".")],
        [("it", "PRP"), ("costs", "VBZ"), ("45", "CD"), ("dollars", "NNS"),
         (".", ".")],
        [("it", "PRP"), ("costs", "VBZ"), ("60", "CD"), ("dollars", "NNS"),
         (".", ".")],
        [("do", "VBP"), ("n't", "RB"), ("walk", "VB"), ("across", "IN"),
         ("the", "DT"), ("road", "NN"), (".", ".")],
        [("they", "PRP"), ("watch", "VBP"), ("a", "DT"), ("play", "NN"),
         ("in", "IN"), ("the", "DT"), ("city", "NN"), (".", ".")],
        [("she", "PRP"), ("will", "MD"), ("play", "VB"), ("a", "DT"),
         ("game", "NN"), (".", ".")],
    ]


def main():
    r = random.Random(20240917)
    docs = []
    token_total = 0
    doc_idx = 0
    while token_total < 10000:
        pairs = []
        for _ in range(r.randint(2, 5)):
            pairs += sentence(r)
        if doc_idx < len(fixed_sentences()):
            pairs = fixed_sentences()[doc_idx] + pairs
        docs.append({
            "id": f"sample-{doc_idx:04d}",
            "tokens": [t for t, _ in pairs],
            "tags": [g for _, g in pairs],
        })
        token_total += len(pairs)
        doc_idx += 1
    with open("data/tagged_sample.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")
    print(f"{len(docs)} documents, {token_total} tokens")


if __name__ == "__main__":
    main()
