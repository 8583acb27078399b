#!/usr/bin/env python3
"""Generate a synthetic minutes corpus plus a macro CSV for pipeline demos.

Writes <out>/corpus/minNN__YYYY-MM-DD.txt files (8 meetings/year) and
<out>/gdp_growth.csv with noisy monthly values.
"""

import argparse
from pathlib import Path

import numpy as np

TOPICS = {
    "inflation": [
        "Inflation remained {adv} the Committee objective over the period.",
        "Measures of longer-term inflation expectations were {adv} stable in recent surveys.",
        "Consumer prices rose {adv} on a twelve-month basis according to the latest readings.",
    ],
    "growth": [
        "Economic activity expanded at a {adj} pace during the intermeeting period.",
        "Real gross domestic product appeared to be rising at a {adj} rate this quarter.",
        "Business fixed investment grew at a {adj} pace relative to last year.",
    ],
    "employment": [
        "Payroll employment rose at a {adj} pace and the unemployment rate stayed low.",
        "Labor market conditions remained {adj} with job gains averaging a solid rate.",
        "The participation rate moved {adv} while wage growth stayed {adj} overall.",
    ],
}
ADJECTIVES = ["solid", "moderate", "modest", "strong", "weak", "subdued"]
ADVERBS = ["near", "below", "above", "broadly", "somewhat", "slightly"]
MEETING_MONTHS = [1, 3, 4, 6, 7, 9, 11, 12]


def build_document(rng: np.random.Generator, n_sentences: int) -> str:
    sentences = ["Return to the previous page."]
    topics = list(TOPICS)
    for _ in range(n_sentences):
        topic = topics[rng.integers(len(topics))]
        template = TOPICS[topic][rng.integers(len(TOPICS[topic]))]
        sentences.append(
            template.format(
                adj=ADJECTIVES[rng.integers(len(ADJECTIVES))],
                adv=ADVERBS[rng.integers(len(ADVERBS))],
            )
        )
    return " ".join(sentences)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_data", help="output directory")
    parser.add_argument("--years", type=int, default=3)
    parser.add_argument("--start-year", type=int, default=2017)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    corpus_dir = Path(args.out) / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)

    n = 0
    for year in range(args.start_year, args.start_year + args.years):
        for month in MEETING_MONTHS:
            n += 1
            day = int(rng.integers(10, 28))
            path = corpus_dir / f"min{n:03d}__{year:04d}-{month:02d}-{day:02d}.txt"
            path.write_text(build_document(rng, int(rng.integers(10, 18))), encoding="utf-8")

    macro_path = Path(args.out) / "gdp_growth.csv"
    lines = ["date,value"]
    level = 2.5
    for year in range(args.start_year, args.start_year + args.years):
        for month in range(1, 13):
            level += float(rng.normal(0, 0.15))
            for day in (5, 15, 25):
                value = level + float(rng.normal(0, 0.05))
                lines.append(f"{year:04d}-{month:02d}-{day:02d},{value:.3f}")
    macro_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    print(f"wrote {n} documents under {corpus_dir}")
    print(f"wrote macro series {macro_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
