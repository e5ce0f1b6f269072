#!/usr/bin/env python3
"""Writes the synthetic fixture corpus under data/fixture/.

The corpus has the option structure of the evaluation splits used for the
reference score tables: after `examkit prepare` the validation split holds
233 language single-answer tasks (134 with four options, 99 with five), 18
language matching tasks, 27 literature single-answer tasks (2 four-option,
25 five-option) and 4 literature matching tasks; the test split holds 92
single-answer tasks (37 four-option, 55 five-option) and 16 matching tasks.
Every matching task has 4 numbered stems and 5 lettered options.

Extra records exercise each cleaning rule once or twice; expected.json lists
what prepare should remove and the resulting maxima and random baselines.

Usage: python3 tools/make_fixture_corpus.py [output_dir]
"""

import json
import random
import sys
from pathlib import Path

LETTERS = ["А", "Б", "В", "Г", "Д"]
SYLLABLES = [
    "ба", "ве", "ги", "до", "жу", "зі", "ка", "ле", "ми", "но", "пу", "ра", "сі", "ту", "фа",
    "хо", "ці", "чу", "ша", "ще", "ля", "ню", "ри", "сто", "кра", "пле", "тро", "вла", "зну", "бри",
    "гро", "дві", "жи", "ко", "лу", "ма", "не", "по", "ро", "са", "ти", "хи", "цьо", "чи", "шу",
]
LANG_TOPICS = [
    "Словотвір. Суфіксальний спосіб",
    "Морфологія. Частини мови",
    "Лексикологія. Синоніми",
    "Синтаксис. Складне речення",
    "Орфографія. Правопис префіксів",
    "Фонетика. Чергування звуків",
    "Пунктуація. Розділові знаки при звертанні",
]
LIT_TOPICS = [
    "Українська література. Давня література",
    "Українська література. Григорій Сковорода",
    "Українська література. Тарас Шевченко",
    "Українська література. Література ХХ століття",
]
MC_PROMPTS = [
    "Укажіть правильний варіант",
    "Позначте рядок, у якому",
    "Виберіть приклад, де",
    "Визначте слово, що",
]

rng = random.Random(20240917)
used_words = set()
used_options = set()


def word():
    while True:
        w = "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(3, 4)))
        if w not in used_words:
            used_words.add(w)
            return w


def phrase(n):
    return " ".join(word() for _ in range(n))


def option_text():
    while True:
        t = phrase(rng.randint(1, 3))
        if t not in used_options:
            used_options.add(t)
            return t


def topic_comment(topic):
    return f"ТЕМА: {topic}.\n{phrase(8).capitalize()}."


def mc_task(test_id, task_id, n_options, topic):
    letters = LETTERS[:n_options]
    return {
        "task_id": task_id,
        "question": f"{rng.choice(MC_PROMPTS)} {phrase(rng.randint(10, 16))}",
        "answers": [{"answer": l, "text": option_text()} for l in letters],
        "answer_vheader": letters,
        "answer_hheader": [],
        "correct_answer": [rng.choice(letters)],
        "comment": topic_comment(topic),
        "with_photo": False,
        "test_id": test_id,
    }


def matching_task(test_id, task_id, topic):
    stems = "\n".join(f"{i} {phrase(rng.randint(3, 5))}" for i in range(1, 5))
    return {
        "task_id": task_id,
        "question": f"Установіть відповідність між {phrase(4)} та {phrase(3)}.\n{stems}",
        "answers": [{"answer": l, "text": option_text()} for l in LETTERS],
        "answer_vheader": list(LETTERS),
        "answer_hheader": ["1", "2", "3", "4"],
        "correct_answer": rng.sample(LETTERS, 4),
        "comment": topic_comment(topic),
        "with_photo": False,
        "test_id": test_id,
    }


def spread(total, parts):
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def build_exam(test_id, four, five, matching, topics, start_id=1):
    kinds = ["mc4"] * four + ["mc5"] * five + ["match"] * matching
    rng.shuffle(kinds)
    tasks = []
    for offset, kind in enumerate(kinds):
        task_id = start_id + offset
        topic = rng.choice(topics)
        if kind == "match":
            tasks.append(matching_task(test_id, task_id, topic))
        else:
            tasks.append(mc_task(test_id, task_id, 4 if kind == "mc4" else 5, topic))
    return tasks


def solution_for(task):
    topic = task["comment"].split("\n", 1)[0][len("ТЕМА: "):].rstrip(".")
    body = " ".join(phrase(6).capitalize() + "." for _ in range(rng.randint(2, 4)))
    if rng.random() < 0.5:
        gold = task["correct_answer"]
        if task["answer_hheader"]:
            pairs = ", ".join(f"{h} – {l}" for h, l in zip(task["answer_hheader"], gold))
            body += f"\nВідповідь: {pairs}."
        else:
            body += f"\nВідповідь – {gold[0]}."
    return {"topic": topic, "solution_text": body}


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    exams = {}

    train_ids = [str(i) for i in range(1001, 1005)]
    val_ids = [str(i) for i in range(2001, 2014)]
    test_ids = [str(i) for i in range(3001, 3005)]

    for tid in train_ids:
        exams[tid] = build_exam(tid, 10, 12, 4, LANG_TOPICS) + build_exam(tid, 1, 3, 1, LIT_TOPICS, start_id=27)

    # Validation: exams 2001-2012 mix language and literature (subject comes
    # from the topic); 2013 is literature only and is listed in subjects.json.
    lang4, lang5, langm = spread(134, 12), spread(99, 12), spread(18, 12)
    lit4, lit5, litm = spread(2, 12), spread(20, 12), spread(3, 12)
    for i, tid in enumerate(val_ids[:12]):
        tasks = build_exam(tid, lang4[i], lang5[i], langm[i], LANG_TOPICS)
        tasks += build_exam(tid, lit4[i], lit5[i], litm[i], LIT_TOPICS, start_id=len(tasks) + 1)
        exams[tid] = tasks
    exams["2013"] = build_exam("2013", 0, 5, 1, LIT_TOPICS)

    test4, test5 = spread(37, 4), spread(55, 4)
    for i, tid in enumerate(test_ids):
        exams[tid] = build_exam(tid, test4[i], test5[i], 4, LANG_TOPICS)

    def next_id(tid):
        return max(t["task_id"] for t in exams[tid]) + 1

    def copy_into(task, tid, **changes):
        new = json.loads(json.dumps(task))
        new["test_id"] = tid
        new["task_id"] = next_id(tid)
        new.update(changes)
        exams[tid].append(new)
        return new

    removals = []

    # Exact duplicate inside validation; the 2001 original survives.
    dup = copy_into(exams["2001"][0], "2007")
    removals.append((dup, "duplicate"))

    # Exact duplicate of a test task in train; test keeps its copy.
    dup = copy_into(exams["3002"][1], "1002")
    removals.append((dup, "duplicate"))

    # Paraphrase: one extra question word.
    src = next(t for t in exams["1001"] if not t["answer_hheader"])
    para = copy_into(src, "1003", question=src["question"] + " " + word())
    removals.append((para, "paraphrase"))

    # No answer, no topic, photo.
    bad = mc_task("1004", next_id("1004"), 4, LANG_TOPICS[0])
    bad["correct_answer"] = []
    exams["1004"].append(bad)
    removals.append((bad, "no_answer"))

    bad = mc_task("2003", next_id("2003"), 5, LANG_TOPICS[1])
    bad["comment"] = phrase(7).capitalize() + "."
    exams["2003"].append(bad)
    removals.append((bad, "no_topic"))

    bad = mc_task("2004", next_id("2004"), 4, LANG_TOPICS[2])
    bad["with_photo"] = True
    exams["2004"].append(bad)
    removals.append((bad, "has_photo"))

    # Leakage: train task sharing a specific option text with a test task.
    test_src = exams["3001"][2]
    leak = mc_task("1001", next_id("1001"), 4, LANG_TOPICS[3])
    leak["answers"][1]["text"] = test_src["answers"][0]["text"]
    exams["1001"].append(leak)
    removals.append((leak, "leakage"))

    # Leakage: validation task repeating a train question with new options.
    train_src = next(t for t in exams["1002"] if not t["answer_hheader"])
    leak = mc_task("2005", next_id("2005"), 4, LANG_TOPICS[4])
    leak["question"] = train_src["question"]
    exams["2005"].append(leak)
    removals.append((leak, "leakage"))

    # Generic overlaps that must not count as leakage: a part-of-speech
    # option shared by a train task and a test task, and a bare
    # matching instruction shared by train and validation.
    test_pos = next(t for t in exams["3003"] if not t["answer_hheader"])
    test_pos["answers"][-1]["text"] = "займенник"
    train_pos = mc_task("1003", next_id("1003"), 5, LANG_TOPICS[1])
    train_pos["answers"][0]["text"] = "займенник"
    exams["1003"].append(train_pos)
    generic_q = "Установіть відповідність між фразеологізмом і його значенням."
    next(t for t in exams["1004"] if t["answer_hheader"])["question"] = generic_q
    next(t for t in exams["2006"] if t["answer_hheader"])["question"] = generic_q

    # Structurally invalid record: reported by prepare, never split.
    broken = mc_task("1002", next_id("1002"), 4, LANG_TOPICS[0])
    broken["answer_vheader"] = LETTERS[:3]
    exams["1002"].append(broken)

    all_tasks = [t for tid in train_ids + val_ids + test_ids for t in exams[tid]]

    split_assignment = {tid: "train" for tid in train_ids}
    split_assignment.update({tid: "validation" for tid in val_ids})
    split_assignment.update({tid: "test" for tid in test_ids})
    config = {
        "paraphrase_threshold": 0.9,
        "shuffle_seed": 20240917,
        "shuffle_test": True,
        "split_assignment": split_assignment,
    }
    subjects = {tid: "language" for tid in test_ids}
    subjects["2013"] = "literature"

    solutions = {}
    for t in all_tasks:
        if t is broken or not t["correct_answer"]:
            continue
        solutions.setdefault(t["test_id"], {})[str(t["task_id"])] = solution_for(t)

    removal_counts = {}
    for _, reason in removals:
        removal_counts[reason] = removal_counts.get(reason, 0) + 1
    expected = {
        "records": len(all_tasks),
        "invalid_records": 1,
        "removals": [
            {"test_id": t["test_id"], "task_id": t["task_id"], "reason": r} for t, r in removals
        ],
        "removal_counts": removal_counts,
        "splits": {
            "validation": {
                "tasks": 233 + 18 + 27 + 4,
                "max": {
                    "language": {"single_answer": 233, "matching": 72, "total": 305},
                    "literature": {"single_answer": 27, "matching": 16, "total": 43},
                    "all": {"single_answer": 260, "matching": 88, "total": 348},
                },
                "random": {
                    "language": {"single_answer": 53.3, "matching": 14.4, "total": 67.7},
                    "literature": {"single_answer": 5.5, "matching": 3.2, "total": 8.7},
                },
            },
            "test": {
                "tasks": 108,
                "max": {"all": {"single_answer": 92, "matching": 64, "total": 156}},
                "random": {"language": {"single_answer": 20.25, "matching": 12.8, "total": 33.05}},
            },
        },
    }

    def dump(name, obj):
        (out / name).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")

    dump("exams.json", all_tasks)
    dump("config.json", config)
    dump("subjects.json", subjects)
    dump("solutions.json", solutions)
    dump("expected.json", expected)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "fixture")
