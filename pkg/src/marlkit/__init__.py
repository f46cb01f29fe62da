"""marlkit: a desk-scale distributed multi-agent reinforcement learning framework.

A system is a full algorithm specification: an executor (the multi-agent
actor), a trainer (the multi-agent learner) and a replay dataset, connected
either in one process or as a local multi-process program graph.
"""

__version__ = "0.1.0"
