"""Echo-oracle agent for the matching-bowls task.

Drives the episode purely from the structured observation delivered over the
wire: any block not sitting in its same-colored bowl gets moved there, lowest
id first. Completing the task through nothing but protocol messages is the
protocol-completeness proof the SDK ships with.

Run directly (``python echo_oracle.py``) or via the installed
``planner-echo-oracle`` script; attach with the environment's
``extern:"<command>"`` planner endpoint.
"""

from __future__ import annotations

import sys
from pathlib import Path

if __package__ in (None, ""):  # direct script invocation, uninstalled
    sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from planner_client.session import Session, SessionClosed

MATCHING_BOWLS_INSTRUCTION = "put the blocks in the bowls with matching colors"


def next_decision(instruction: str, observation: dict | None) -> dict:
    """One protocol message for the current observation."""
    if instruction.strip().rstrip(".").lower() != MATCHING_BOWLS_INSTRUCTION:
        return {"type": "giveup", "reason": f"cannot plan for: {instruction!r}"}
    if not observation:
        return {"type": "giveup", "reason": "no structured observation"}
    objects = observation.get("objects", [])
    bowls = {o["id"]: o for o in objects if o.get("kind") == "bowl"}
    todo = []
    for o in objects:
        if o.get("kind") != "block":
            continue
        support = o.get("support", {})
        if support.get("kind") == "in_bowl":
            bowl = bowls.get(support.get("base"))
            if bowl is not None and bowl.get("color") == o.get("color"):
                continue
        todo.append(o)
    if not todo:
        return {"type": "done"}
    block = min(todo, key=lambda o: o["id"])
    color = block["color"]
    return {
        "type": "action",
        "text": f"Pick up the {color} block and place it in the {color} bowl",
    }


def run(session: Session) -> None:
    while True:
        decision = next_decision(session.instruction, session.observation)
        if decision["type"] == "done":
            session.send_done()
            return
        if decision["type"] == "giveup":
            session.send_giveup(decision["reason"])
            return
        try:
            session.send_action(text=decision["text"])
        except SessionClosed:
            return


def main() -> int:
    try:
        session = Session.stdio()
    except SessionClosed:
        return 0
    try:
        run(session)
    except SessionClosed:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
