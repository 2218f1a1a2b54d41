#!/usr/bin/env python3
"""Reference METEOR (exact + Porter stem stages) used to freeze test values.

Deterministic two-stage greedy alignment: each hypothesis token takes the
leftmost unmatched reference token, first by surface equality, then by
Porter stem equality. Chunks are maximal runs of matched hypothesis tokens
whose reference indices advance by exactly one; an unmatched hypothesis
token in between breaks a chunk. fmean = P*R / (alpha*P + (1-alpha)*R),
penalty = gamma * (chunks/m)^beta, score = fmean * (1 - penalty).
Multi-reference takes the max over references.
"""
from porter_oracle import porter_stem

ALPHA, BETA, GAMMA = 0.9, 3.0, 0.5


def align(hyp, ref):
    hyp_to_ref = [-1] * len(hyp)
    used = [False] * len(ref)
    for i, h in enumerate(hyp):
        for j, r in enumerate(ref):
            if not used[j] and h == r:
                hyp_to_ref[i] = j
                used[j] = True
                break
    hs = [porter_stem(h) for h in hyp]
    rs = [porter_stem(r) for r in ref]
    for i in range(len(hyp)):
        if hyp_to_ref[i] >= 0:
            continue
        for j in range(len(ref)):
            if not used[j] and hs[i] == rs[j]:
                hyp_to_ref[i] = j
                used[j] = True
                break
    matches = 0
    chunks = 0
    prev = -2
    for i in range(len(hyp)):
        if hyp_to_ref[i] < 0:
            prev = -2
            continue
        matches += 1
        if hyp_to_ref[i] != prev + 1:
            chunks += 1
        prev = hyp_to_ref[i]
    return matches, chunks


def meteor(hyp, ref):
    m, ch = align(hyp, ref)
    if m == 0:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    fmean = p * r / (ALPHA * p + (1 - ALPHA) * r)
    penalty = GAMMA * (ch / m) ** BETA
    return fmean * (1 - penalty)


def meteor_multi(hyp, refs):
    return max(meteor(hyp, r) for r in refs)


def main():
    cases = [
        ("identity", "the cat sat on the mat".split(), ["the cat sat on the mat".split()]),
        ("reorder", "on the mat the cat sat".split(), ["the cat sat on the mat".split()]),
        ("stem_match", "the cats are sitting".split(), ["the cat sits".split()]),
        ("no_match", "x y z".split(), ["a b c".split()]),
        (
            "partial",
            "there is a bus departing at 8 am .".split(),
            ["there is a bus leaving at 8 am .".split()],
        ),
        (
            "multi_ref",
            "what time do you want ?".split(),
            ["when do you want it ?".split(), "what time do you want ?".split()],
        ),
        (
            "penalty_case",
            "a b c d".split(),
            ["a x b y c z d".split()],
        ),
    ]
    for name, hyp, refs in cases:
        m, ch = align(hyp, refs[0])
        print(f"{name} m={m} chunks={ch} meteor_multi {meteor_multi(hyp, refs):.10f}")
    five = [
        ("the cuisine is mexican .".split(),
         ["the cuisine is mexican .".split(), "the type of food is mexican .".split()]),
        ("there is a bus departing at $departure_time_1 .".split(),
         ["there is a bus leaving at $departure_time_1 .".split()]),
        ("please confirm the $city_1 reservation now".split(),
         ["please confirm your reservation in $city_1 .".split()]),
        ("what time do you want ?".split(),
         ["what time do you want ?".split(), "when do you want it ?".split()]),
        ("goodbye and have a great day".split(),
         ["goodbye , have a great day !".split()]),
    ]
    mean = sum(meteor_multi(h, rs) for h, rs in five) / len(five)
    print(f"five_instance mean_meteor {mean:.10f}")


if __name__ == "__main__":
    main()
