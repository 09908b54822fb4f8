"""Configuration, task orchestration and exports behind the ``hexnpc`` command."""
