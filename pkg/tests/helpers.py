import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path


def tree_hash(root) -> str:
    """Hash of every file path and its bytes below ``root``."""
    h = hashlib.sha256()
    root = Path(root)
    for p in sorted(root.rglob("*")):
        if p.is_file() and "__pycache__" not in p.parts:
            h.update(p.relative_to(root).as_posix().encode() + b"\0")
            h.update(p.read_bytes() + b"\0")
    return h.hexdigest()


def file_count(root) -> int:
    return sum(1 for p in Path(root).rglob("*") if p.is_file())


def run_generated(project: Path, unit: str, args: list, env: dict = None) -> dict:
    """Call ``sendRequest(*args)`` of a generated client in a fresh interpreter."""
    script = (
        "import importlib, json, sys\n"
        f"mod = importlib.import_module('httplib.clients.{unit}')\n"
        "args = json.loads(sys.argv[1])\n"
        "print(json.dumps(mod.sendRequest(*args).to_dict()))\n"
    )
    full_env = dict(os.environ, PYTHONPATH=str(project / "src" / "main" / "python"))
    full_env.update(env or {})
    out = subprocess.run([sys.executable, "-c", script, json.dumps(args)], env=full_env,
                         capture_output=True, text=True, timeout=60)
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return json.loads(out.stdout)
