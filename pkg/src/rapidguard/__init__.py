"""rapidguard: rapid-response protection platform for LLM attacks.

Subpackages:
  ruleforge     - signature rule language (parse, compile, scan, validate, diff)
  intelops      - threat-intel ingestion, scoring, triage, reporting
  knowledgebase - unified prompt knowledge table, golden labels, task queue
  datagen       - attack data generation with checkpointed workers
  release       - immutable guardrail versions, routing, shadow, gating
  gateway       - HTTP service and CLI composing the platform
"""

__version__ = "0.1.0"
