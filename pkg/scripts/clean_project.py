#!/usr/bin/env python
"""Remove caches, coverage reports and run outputs."""
import shutil
import sys
from pathlib import Path


def remove_path(path: Path, description: str) -> None:
    """Remove a file or directory if present."""
    if not path.exists():
        print(f"⚪ {description} not found: {path}")
        return
    try:
        if path.is_dir():
            shutil.rmtree(path)
        else:
            path.unlink()
        print(f"✅ Removed {description}: {path}")
    except OSError as e:
        print(f"❌ Failed to remove {description} {path}: {e}")


def remove_pattern(root: Path, pattern: str, description: str) -> None:
    """Remove every file or directory under ``root`` matching ``pattern``."""
    count = 0
    for path in root.rglob(pattern):
        if "examples" in path.relative_to(root).parts:
            continue
        try:
            if path.is_dir():
                shutil.rmtree(path)
            else:
                path.unlink()
            count += 1
        except OSError as e:
            print(f"❌ Failed to remove {path}: {e}")
    print(f"✅ Removed {count} {description}" if count else f"⚪ No {description} found")


def main() -> int:
    """Clean caches and outputs of solve, eig, verify and sweep runs."""
    project_root = Path(__file__).parent.parent

    print("Cleaning singular-pucci-eigen project...")
    print("=" * 50)

    remove_pattern(project_root, "__pycache__", "Python cache directories")
    remove_pattern(project_root, "*.pyc", "Python compiled files (.pyc)")
    remove_path(project_root / ".coverage", ".coverage file")
    remove_path(project_root / "htmlcov", "HTML coverage report directory")
    remove_path(project_root / ".pytest_cache", "pytest cache directory")
    remove_path(project_root / ".mypy_cache", "MyPy cache directory")
    remove_path(project_root / ".ruff_cache", "Ruff cache directory")
    # Default output.dir
    remove_path(project_root / "results", "run results directory")
    remove_pattern(project_root, "*.egg-info", "egg-info directories")

    print("\n" + "=" * 50)
    print("🎉 Project cleaning complete!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
