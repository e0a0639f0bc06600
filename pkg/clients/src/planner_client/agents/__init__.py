"""Example agents: an echo-oracle for the matching-bowls task, a babbling
robustness probe, and a skeleton showing where an LLM call slots in."""
