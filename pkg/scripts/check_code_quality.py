#!/usr/bin/env python
"""Code quality checks, plus a load test of every shipped run configuration."""
import os
import subprocess
import sys
from pathlib import Path
from typing import List

SOURCES = ["src", "tests", "main.py"]


def run_command(cmd: List[str], description: str) -> bool:
    """Run a command and report results."""
    print(f"\n🔍 {description}...")
    print("-" * 40)

    try:
        subprocess.run(cmd, check=True)
        print(f"✅ {description} passed!")
        return True
    except subprocess.CalledProcessError:
        print(f"❌ {description} failed!")
        return False
    except FileNotFoundError:
        print(f"⚠️  {cmd[0]} not found. Install with: pip install -e .[dev]")
        return False


def check_configs(project_root: Path) -> bool:
    """Load and validate every file under configs/ without running it."""
    print("\n🔍 Run configuration check...")
    print("-" * 40)

    sys.path.insert(0, str(project_root))
    from src.config import load_config
    from src.exceptions import ConfigurationError

    paths = sorted((project_root / "configs").glob("*.cfg"))
    bad = 0
    for path in paths:
        try:
            load_config(path)
        except ConfigurationError as e:
            print(f"❌ {path.name}: {e}")
            bad += 1
    if bad:
        print(f"❌ {bad} of {len(paths)} configurations invalid!")
        return False
    print(f"✅ {len(paths)} configurations valid!")
    return True


def main() -> int:
    """Run all code quality checks."""
    project_root = Path(__file__).parent.parent
    os.chdir(project_root)

    print("Running code quality checks for singular-pucci-eigen...")
    print("=" * 60)

    all_passed = True
    all_passed &= run_command(
        [sys.executable, "-m", "black", "--check", *SOURCES], "Black formatting check"
    )
    all_passed &= run_command(
        [sys.executable, "-m", "ruff", "check", *SOURCES], "Ruff linting"
    )
    all_passed &= run_command(
        [sys.executable, "-m", "mypy", "src", "main.py", "scripts"], "MyPy type checking"
    )
    all_passed &= check_configs(project_root)

    print("\n" + "=" * 60)
    if all_passed:
        print("✅ All code quality checks passed!")
        return 0

    print("❌ Some code quality checks failed!")
    print("\n💡 To fix issues:")
    print(f"   - Formatting: python -m black {' '.join(SOURCES)}")
    print(f"   - Linting: python -m ruff check --fix {' '.join(SOURCES)}")
    print("   - Type hints: Fix manually based on mypy output")
    print("   - Configurations: the failing key and line are named above")
    return 1


if __name__ == "__main__":
    sys.exit(main())
