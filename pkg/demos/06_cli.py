"""Driving an experiment through the command line entry point.

Same as `freebnd run configs/obstacle_1d.yaml --out /tmp/...` from a shell.
"""
import json
import sys
import tempfile
from pathlib import Path

from freebnd.cli import main

cfg = Path(__file__).resolve().parent.parent / "configs" / "obstacle_1d_oracle.yaml"
out = Path(tempfile.mkdtemp()) / "run"
main(["validate", str(cfg)])
code = main(["run", str(cfg), "--out", str(out)])
print("exit code", code)
main(["report", str(out)])
rep = json.loads((out / "report.json").read_text())
print(sorted(p.name for p in (out / "tables").iterdir()))
sys.exit(code)
