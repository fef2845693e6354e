"""Shared fixtures: canned models and a tiny C toolchain wrapper."""

import subprocess
from pathlib import Path

import pytest

from sdflow import Trace, load_model_file

MODELS = Path(__file__).parent / "models"


def load_fixture(name):
    return load_model_file(MODELS / f"{name}.json")


@pytest.fixture
def multirate():
    return load_fixture("multirate")


@pytest.fixture
def multirate_rt():
    return load_fixture("multirate_rt")


@pytest.fixture
def transmission():
    return load_fixture("transmission")


@pytest.fixture
def climate():
    return load_fixture("climate")


def compile_and_run(bundle, workdir) -> str:
    """Build a SourceBundle in workdir, run the harness, return its CSV."""
    bundle.write(workdir)
    build = subprocess.run(["sh", "build.sh"], cwd=workdir,
                           capture_output=True, text=True)
    assert build.returncode == 0, f"cc failed:\n{build.stderr}"
    exe = Path(workdir) / f"sdfg_{bundle.name}"
    run = subprocess.run([str(exe)], capture_output=True, text=True)
    assert run.returncode == 0, f"harness failed:\n{run.stderr}"
    return run.stdout


def c_trace(bundle, workdir, specs) -> Trace:
    return Trace.from_csv(compile_and_run(bundle, workdir), specs)
