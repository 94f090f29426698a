"""Dataset export and reimport.

An export is three text artifacts: dataset.jsonl (one row per labeled
object, then the leftovers), hierarchy.json (the canonical tree) and
transcripts.jsonl (one interrogation record per episode). Rows appear in
assignment order, so exporting, reimporting and exporting again is
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .agreement import ReliabilityData
from .session import DATASET_VERSION, TRANSCRIPTS_VERSION, Session


@dataclass(frozen=True)
class ExportBundle:
    session_id: str
    feature_dim: int
    assigned: tuple[dict, ...]  # {"object_id","source","crop","path","category","category_name"}
    unassigned: tuple[dict, ...]  # {"object_id","status"}
    hierarchy_json: str
    transcripts: tuple[dict, ...]

    def dataset_jsonl(self) -> str:
        header = {
            "version": DATASET_VERSION,
            "type": "dataset",
            "session_id": self.session_id,
            "feature_dim": self.feature_dim,
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines.extend(
            json.dumps({"row": "assigned", **row}, sort_keys=True) for row in self.assigned
        )
        lines.extend(
            json.dumps({"row": "unassigned", **row}, sort_keys=True) for row in self.unassigned
        )
        return "\n".join(lines) + "\n"

    def transcripts_jsonl(self) -> str:
        header = {
            "version": TRANSCRIPTS_VERSION,
            "type": "transcripts",
            "session_id": self.session_id,
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines.extend(json.dumps(t, sort_keys=True) for t in self.transcripts)
        return "\n".join(lines) + "\n"

    def labels(self) -> dict[str, str]:
        """object_id -> assigned path, for agreement computations."""
        return {row["object_id"]: row["path"] for row in self.assigned}

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "dataset": out / "dataset.jsonl",
            "hierarchy": out / "hierarchy.json",
            "transcripts": out / "transcripts.jsonl",
        }
        paths["dataset"].write_text(self.dataset_jsonl(), encoding="utf-8")
        paths["hierarchy"].write_text(self.hierarchy_json, encoding="utf-8")
        paths["transcripts"].write_text(self.transcripts_jsonl(), encoding="utf-8")
        return paths


def export_dataset(session: Session) -> ExportBundle:
    state = session.state
    h = state.hierarchy
    assigned_rows = []
    for transcript in state.transcripts:
        object_id = transcript["object_id"]
        inst = next(o for o in state.queue if o.object_id == object_id)
        node = h.node(transcript["outcome"]["category"])
        assigned_rows.append(
            {
                "object_id": object_id,
                "source": inst.source,
                "uri": state.image_uris.get(inst.source),
                "crop": {"x": inst.crop.x, "y": inst.crop.y, "side": inst.crop.side},
                "path": transcript["outcome"]["path"],
                "category": transcript["outcome"]["category"],
                "category_name": node.name,
            }
        )
    covered = {row["object_id"] for row in assigned_rows}
    aborted = {a["object_id"] for a in state.aborted}
    unassigned = [
        {"object_id": o.object_id, "status": "aborted" if o.object_id in aborted else "pending"}
        for o in state.queue
        if o.object_id not in covered
    ]
    return ExportBundle(
        session_id=state.config.session_id,
        feature_dim=state.config.feature_dim,
        assigned=tuple(assigned_rows),
        unassigned=tuple(unassigned),
        hierarchy_json=h.dumps(),
        transcripts=tuple(state.transcripts),
    )


def reimport_dataset(
    dataset_jsonl: str, hierarchy_json: str, transcripts_jsonl: str | None = None
) -> ExportBundle:
    """Parse exported texts back into a bundle that re-exports identically."""
    lines = [line for line in dataset_jsonl.split("\n") if line]
    header = json.loads(lines[0])
    if header.get("version") != DATASET_VERSION or header.get("type") != "dataset":
        raise ValueError("not a dataset export")
    assigned, unassigned = [], []
    for line in lines[1:]:
        row = json.loads(line)
        kind = row.pop("row")
        (assigned if kind == "assigned" else unassigned).append(row)
    transcripts: list[dict] = []
    if transcripts_jsonl:
        tlines = [line for line in transcripts_jsonl.split("\n") if line]
        theader = json.loads(tlines[0])
        if theader.get("type") != "transcripts":
            raise ValueError("not a transcripts export")
        transcripts = [json.loads(line) for line in tlines[1:]]
    return ExportBundle(
        session_id=header["session_id"],
        feature_dim=header["feature_dim"],
        assigned=tuple(assigned),
        unassigned=tuple(unassigned),
        hierarchy_json=hierarchy_json,
        transcripts=tuple(transcripts),
    )


def load_export_dir(path: str | Path) -> ExportBundle:
    path = Path(path)
    transcripts_path = path / "transcripts.jsonl"
    return reimport_dataset(
        (path / "dataset.jsonl").read_text(encoding="utf-8"),
        (path / "hierarchy.json").read_text(encoding="utf-8"),
        transcripts_path.read_text(encoding="utf-8") if transcripts_path.exists() else None,
    )


def reliability_from_exports(bundles: dict[str, ExportBundle]) -> ReliabilityData:
    """Units = all objects any coder labeled; unlabeled cells stay missing."""
    return ReliabilityData.from_rows({coder: b.labels() for coder, b in bundles.items()})
