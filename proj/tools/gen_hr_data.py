#!/usr/bin/env python3
"""Regenerates the bundled HR fixtures under data/hr."""
import json
import random
import sys
from pathlib import Path

TITLES = ["ML Engineer", "Data Scientist", "Backend Engineer", "Frontend Engineer",
          "Product Manager", "DevOps Engineer"]
SKILLS = ["python", "ml", "sql", "go", "java", "react", "kubernetes", "statistics",
          "typescript", "aws", "spark", "pytorch"]
LOCATIONS = ["remote", "new york", "london", "berlin", "toronto", "bangalore"]
FIRST = ["Ada", "Ben", "Chen", "Dana", "Eli", "Fatima", "Gus", "Hana", "Ivan", "Jia",
         "Kofi", "Lena", "Mateo", "Nia", "Omar", "Priya", "Quinn", "Ravi", "Sara", "Tomas"]
LAST = ["Abbott", "Baker", "Cruz", "Diaz", "Evans", "Fischer", "Garcia", "Huang", "Ito",
        "Jensen", "Khan", "Lopez", "Moreau", "Novak", "Okafor", "Patel", "Rossi", "Sato"]
INTERVIEWERS = ["alice", "bob", "carol", "dave"]
COMMENTS = {1: "not a fit", 2: "weak fundamentals", 3: "mixed signals", 4: "strong", 5: "outstanding"}


def main(out_dir: Path) -> None:
    rng = random.Random(20240601)
    profiles = []
    for i in range(1, 501):
        title = rng.choice(TITLES)
        skills = sorted(rng.sample(SKILLS, rng.randint(2, 5)))
        profiles.append({
            "profile_id": f"p{i:04d}",
            "name": f"{rng.choice(FIRST)} {rng.choice(LAST)}",
            "title": title,
            "skills": skills,
            "location": rng.choice(LOCATIONS),
            "years": rng.randint(1, 15),
        })

    # Four interviewers; the first three share exactly one free slot.
    days = [f"2026-03-{d:02d}T{h:02d}:00" for d in range(2, 7) for h in (9, 11, 14, 16)]
    shared = "2026-03-04T14:00"
    calendars = {}
    for who in INTERVIEWERS:
        own = [s for s in days if s != shared and rng.random() < 0.35]
        calendars[who] = own
    # Remove accidental overlaps among the first three.
    a, b, c = (set(calendars[w]) for w in INTERVIEWERS[:3])
    overlap = a & b & c
    calendars["carol"] = [s for s in calendars["carol"] if s not in overlap]
    for who in INTERVIEWERS:
        calendars[who] = sorted(set(calendars[who]) | {shared})

    feedback = []
    for p in profiles:
        for who in rng.sample(INTERVIEWERS, 2):
            score = rng.randint(1, 5)
            feedback.append({"profile_id": p["profile_id"], "interviewer": who,
                             "score": score, "comment": COMMENTS[score]})

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "profiles.json").write_text(json.dumps(profiles, indent=1) + "\n")
    (out_dir / "calendars.json").write_text(json.dumps({"interviewers": calendars}, indent=1) + "\n")
    (out_dir / "feedback.json").write_text(json.dumps(feedback, indent=1) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "hr")
