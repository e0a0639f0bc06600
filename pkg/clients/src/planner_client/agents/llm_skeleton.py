"""Skeleton for a language-model-backed planner.

The session loop is complete; only `propose_instruction` needs an
implementation. It receives the high-level goal instruction, the latest
caption and outcome sentence, and the structured observation, and must return
one single-step instruction like "Pick up the red block and place it in the
red bowl" (or None to declare the goal reached).
"""

from __future__ import annotations

import sys
from pathlib import Path

if __package__ in (None, ""):  # direct script invocation, uninstalled
    sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from planner_client.session import Session, SessionClosed


def propose_instruction(
    goal: str,
    caption: str,
    outcome_text: str,
    observation: dict | None,
) -> str | None:
    """Produce the next single-step instruction.

    This is the integration point: build a prompt from the goal, the caption
    history and the outcome feedback, call your model, and return its
    instruction verbatim. Returning None sends "done".
    """
    raise NotImplementedError("plug an LLM call in here")


def main() -> int:
    try:
        session = Session.stdio()
    except SessionClosed:
        return 0
    outcome_text = ""
    try:
        while True:
            step = propose_instruction(
                session.instruction, session.caption, outcome_text, session.observation
            )
            if step is None:
                session.send_done()
                return 0
            feedback = session.send_action(text=step)
            outcome_text = feedback.outcome_text
    except SessionClosed:
        return 0


if __name__ == "__main__":
    sys.exit(main())
