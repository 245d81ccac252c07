"""Access to the recorded scripted-client fixtures under fixtures/."""
import json
import pathlib

from autotamp import scenarios
from autotamp.llm import ScriptedClient

ROOT = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def manifest() -> dict:
    return {entry["name"]: entry for entry in json.loads((ROOT / "manifest.json").read_text())}


def client(name: str) -> ScriptedClient:
    return ScriptedClient.from_file(ROOT / f"{name}.json")


def case(case_id: str) -> scenarios.ScenarioCase:
    if case_id.startswith("fixture:"):
        data = json.loads((ROOT / "cases" / f"{case_id[len('fixture:'):]}.json").read_text())
        return scenarios.case_from_dict(data)
    return {c.case_id: c for c in scenarios.builtin_cases()}[case_id]
