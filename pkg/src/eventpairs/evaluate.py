"""Forced-choice evaluation tasks and rater scoring.

Each kept refinement record becomes one two-alternative question: the
predicted pair against its random control, shuffled onto sides A/B.
Tasks are grouped into batches of twenty.  Collected responses are
scored by dropping the least-correlated raters and computing accuracy
over the rest; because every question is a forced choice, precision and
recall both equal accuracy.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .artifacts import ArtifactError, params_hash, read_tsv, write_tsv
from .refine import KEEP, RefinementRecord

BATCH_SIZE = 20
DEFAULT_DROP_COUNT = 5

ORDER_MATTERS = "order-matters"
ORDER_IGNORED = "order-ignored"

INSTRUCTION_TEXTS = {
    ORDER_MATTERS: (
        "Each question shows two event pairs, A and B. Choose the pair whose "
        "events are more likely to occur together. The order of the events "
        "matters: the first event should plausibly come before the second."
    ),
    ORDER_IGNORED: (
        "Each question shows two event pairs, A and B. Choose the pair whose "
        "events are more likely to occur together. The order in which the "
        "events are listed does not matter."
    ),
}


@dataclass(frozen=True)
class ChoiceTask:
    task_id: str
    pair_a: str
    pair_b: str
    # which side shows the predicted pair; recorded in the answer key
    # only, never in the rater-facing task file
    correct_side: str
    order_matters: bool
    show_arguments: bool

    def __post_init__(self) -> None:
        if self.correct_side not in ("A", "B"):
            raise ValueError(f"correct side must be 'A' or 'B', got {self.correct_side!r}")
        if self.pair_a == self.pair_b:
            raise ValueError(f"task {self.task_id}: both sides render identically")


@dataclass(frozen=True)
class HitBatch:
    batch_id: str
    tasks: tuple[ChoiceTask, ...]
    instructions: str  # ORDER_MATTERS or ORDER_IGNORED


@dataclass(frozen=True)
class RaterResponse:
    rater_id: str
    answers: Mapping[str, str]  # task id -> chosen side


@dataclass
class EvalResult:
    retained_raters: list[str]
    dropped_raters: list[str]
    per_rater_mean_correlation: dict[str, float]
    accuracy: float | None = None
    correct_answers: int = 0
    total_answers: int = 0

    @property
    def precision(self) -> float | None:
        return self.accuracy

    @property
    def recall(self) -> float | None:
        return self.accuracy


def render_event(verb: str, subject: str = "", object_: str = "", show_arguments: bool = False) -> str:
    """`person UNLOCK door` with arguments, bare `UNLOCK` without."""
    if not show_arguments:
        return verb.upper()
    return " ".join(part for part in (subject, verb.upper(), object_) if part)


def render_record_pair(record: RefinementRecord, which: str, show_arguments: bool) -> str:
    first = render_event(
        record.pcep.first, record.first_subject, record.first_object, show_arguments
    )
    if which == "pcep":
        second = render_event(
            record.pcep.second, record.second_subject, record.second_object, show_arguments
        )
    else:
        second = render_event(
            record.rep_second, record.rep_second_subject, record.rep_second_object, show_arguments
        )
    return f"{first} - {second}"


def generate_choice_tasks(
    kept: Sequence[RefinementRecord],
    seed: int,
    order_matters: bool = True,
    show_arguments: bool = False,
) -> list[HitBatch]:
    """One task per kept record, predicted side seeded uniformly at
    random, grouped into batches of twenty (last batch may be short)."""
    if not kept:
        raise ValueError("no kept records to build evaluation tasks from")
    rng = random.Random(seed)
    variant = ORDER_MATTERS if order_matters else ORDER_IGNORED
    tasks = []
    for index, record in enumerate(kept):
        pcep_render = render_record_pair(record, "pcep", show_arguments)
        rep_render = render_record_pair(record, "rep", show_arguments)
        correct_side = "A" if rng.random() < 0.5 else "B"
        pair_a, pair_b = (
            (pcep_render, rep_render) if correct_side == "A" else (rep_render, pcep_render)
        )
        tasks.append(
            ChoiceTask(
                task_id=f"t{index + 1:04d}",
                pair_a=pair_a,
                pair_b=pair_b,
                correct_side=correct_side,
                order_matters=order_matters,
                show_arguments=show_arguments,
            )
        )
    batches = []
    for start in range(0, len(tasks), BATCH_SIZE):
        batches.append(
            HitBatch(
                batch_id=f"b{start // BATCH_SIZE + 1:02d}",
                tasks=tuple(tasks[start : start + BATCH_SIZE]),
                instructions=variant,
            )
        )
    return batches


def keep_records(records: Sequence[RefinementRecord]) -> list[RefinementRecord]:
    return [r for r in records if r.decision == KEEP]


def _pearson(x: Sequence[int], y: Sequence[int]) -> float:
    # Raters who always answer the same way have zero variance; their
    # pairwise correlation is defined as 0.
    try:
        return statistics.correlation(x, y)
    except statistics.StatisticsError:
        return 0.0


def filter_raters(
    responses: Sequence[RaterResponse],
    tasks: Mapping[str, ChoiceTask],
    drop_count: int = DEFAULT_DROP_COUNT,
) -> EvalResult:
    """Drop the `drop_count` raters with the lowest mean pairwise
    correlation of their chose-predicted-pair (+1/-1) answer vectors."""
    if drop_count < 0:
        raise ValueError("drop count must be >= 0")
    if len(responses) < drop_count + 2:
        raise ValueError(
            f"need at least {drop_count + 2} raters to drop {drop_count}, "
            f"got {len(responses)}"
        )
    rater_ids = [r.rater_id for r in responses]
    if len(set(rater_ids)) != len(rater_ids):
        raise ValueError("duplicate rater ids in responses")
    task_ids = sorted(responses[0].answers)
    for response in responses:
        if sorted(response.answers) != task_ids:
            raise ValueError(
                f"rater '{response.rater_id}' answered a different task set"
            )
        for task_id, side in response.answers.items():
            if task_id not in tasks:
                raise ValueError(
                    f"rater '{response.rater_id}' answered unknown task '{task_id}'"
                )
            if side not in ("A", "B"):
                raise ValueError(
                    f"rater '{response.rater_id}' gave invalid side {side!r}"
                )

    vectors = {
        r.rater_id: [
            1 if r.answers[tid] == tasks[tid].correct_side else -1 for tid in task_ids
        ]
        for r in responses
    }
    mean_correlation = {}
    for rater in rater_ids:
        others = [
            _pearson(vectors[rater], vectors[other]) for other in rater_ids if other != rater
        ]
        mean_correlation[rater] = sum(others) / len(others)

    by_score = sorted(rater_ids, key=lambda rid: (mean_correlation[rid], rid))
    dropped = sorted(by_score[:drop_count])
    retained = sorted(set(rater_ids) - set(dropped))
    return EvalResult(
        retained_raters=retained,
        dropped_raters=dropped,
        per_rater_mean_correlation=mean_correlation,
    )


def compute_accuracy(
    result: EvalResult,
    tasks: Mapping[str, ChoiceTask],
    responses: Sequence[RaterResponse],
) -> EvalResult:
    """Fraction of retained raters' answers matching the predicted side."""
    retained = set(result.retained_raters)
    correct = total = 0
    for response in responses:
        if response.rater_id not in retained:
            continue
        for task_id, side in response.answers.items():
            total += 1
            if side == tasks[task_id].correct_side:
                correct += 1
    if total == 0:
        raise ValueError("no answers from retained raters")
    return replace(
        result, accuracy=correct / total, correct_answers=correct, total_answers=total
    )


def format_percent(fraction: float) -> str:
    return f"{fraction * 100:.2f}%"


def tasks_params(
    refined_hash: str, seed: int, order_matters: bool, show_arguments: bool
) -> dict:
    return {
        "upstream": refined_hash,
        "seed": seed,
        "orderMatters": order_matters,
        "showArguments": show_arguments,
    }


_TASK_COLUMNS = ("taskId", "batchId", "pairA", "pairB", "instructions")
_KEY_COLUMNS = ("taskId", "correctSide")
_RESPONSE_COLUMNS = ("raterId", "taskId", "chosenSide")


def write_task_files(
    batches: Sequence[HitBatch],
    out_dir: str | Path,
    *,
    refined_hash: str,
    seed: int,
) -> None:
    """Write tasks.tsv, instructions.txt and the separate answer key.

    The answer key lives in its own file so task files can be published
    to raters without revealing which side is the predicted pair.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not batches:
        raise ValueError("no batches to write")
    order_matters = batches[0].instructions == ORDER_MATTERS
    show_arguments = batches[0].tasks[0].show_arguments if batches[0].tasks else False
    params = tasks_params(refined_hash, seed, order_matters, show_arguments)
    meta = {
        "hash": params_hash(params),
        "upstream": refined_hash,
        "seed": str(seed),
        "orderMatters": str(order_matters).lower(),
        "showArguments": str(show_arguments).lower(),
    }
    task_rows = []
    key_rows = []
    for batch in batches:
        for task in batch.tasks:
            task_rows.append(
                (task.task_id, batch.batch_id, task.pair_a, task.pair_b, batch.instructions)
            )
            key_rows.append((task.task_id, task.correct_side))
    write_tsv(out / "tasks.tsv", "tasks", meta, _TASK_COLUMNS, task_rows)
    write_tsv(out / "answer_key.tsv", "answer-key", meta, _KEY_COLUMNS, key_rows)
    variant = batches[0].instructions
    with open(out / "instructions.txt", "w", encoding="utf-8") as handle:
        handle.write(INSTRUCTION_TEXTS[variant] + "\n")


def read_task_files(task_dir: str | Path) -> tuple[dict[str, str], dict[str, ChoiceTask]]:
    task_dir = Path(task_dir)
    meta, _, task_rows = read_tsv(task_dir / "tasks.tsv", "tasks")
    key_meta, _, key_rows = read_tsv(task_dir / "answer_key.tsv", "answer-key")
    if key_meta.get("hash") != meta.get("hash"):
        raise ArtifactError(f"{task_dir}: answer key does not match task file")
    key = dict(key_rows)
    order_matters = meta.get("orderMatters") == "true"
    show_arguments = meta.get("showArguments") == "true"
    tasks = {}
    for task_id, _batch_id, pair_a, pair_b, _instructions in task_rows:
        if task_id not in key:
            raise ArtifactError(f"{task_dir}: task '{task_id}' missing from answer key")
        tasks[task_id] = ChoiceTask(
            task_id=task_id,
            pair_a=pair_a,
            pair_b=pair_b,
            correct_side=key[task_id],
            order_matters=order_matters,
            show_arguments=show_arguments,
        )
    return meta, tasks


def write_responses(responses: Sequence[RaterResponse], path: str | Path) -> None:
    rows = []
    for response in responses:
        for task_id in sorted(response.answers):
            rows.append((response.rater_id, task_id, response.answers[task_id]))
    write_tsv(path, "responses", {"raters": str(len(responses))}, _RESPONSE_COLUMNS, rows)


def read_responses(path: str | Path) -> list[RaterResponse]:
    _, _, rows = read_tsv(path, "responses")
    answers: dict[str, dict[str, str]] = {}
    for rater_id, task_id, side in rows:
        per_rater = answers.setdefault(rater_id, {})
        if task_id in per_rater:
            raise ArtifactError(f"{path}: rater '{rater_id}' answered '{task_id}' twice")
        per_rater[task_id] = side
    return [RaterResponse(rater_id=rid, answers=answers[rid]) for rid in sorted(answers)]


def write_eval_report(result: EvalResult, path: str | Path, drop_count: int) -> None:
    if result.accuracy is None:
        raise ValueError("accuracy has not been computed")
    record = {
        "accuracy": result.accuracy,
        "accuracyPercent": format_percent(result.accuracy),
        "precision": result.precision,
        "recall": result.recall,
        "correctAnswers": result.correct_answers,
        "totalAnswers": result.total_answers,
        "dropCount": drop_count,
        "retainedRaters": result.retained_raters,
        "droppedRaters": result.dropped_raters,
        "perRaterMeanCorrelation": {
            rater: round(score, 6)
            for rater, score in sorted(result.per_rater_mean_correlation.items())
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(record, handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")
