"""evbtwin: desk-scale digital-twin teleoperation suite for robotic
battery-pack disassembly (simulated 7-DoF cell, tagged assembly model, skill
planning, cyclic control protocol, pose registration, record/replay, and the
cost/usability arithmetic)."""

__version__ = "0.1.0"
