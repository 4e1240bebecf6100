#!/usr/bin/env python3
"""
Local testing script for the NLS laboratory
Runs unit, integration and E2E tests in order and stops at the first failing stage
"""

import os
import subprocess
import sys
from pathlib import Path

STAGES = [
    ("unit tests", "python3 -m pytest tests/unit/ -v"),
    ("integration tests", "python3 -m pytest tests/integration/ -v -m integration"),
    ("E2E tests", "python3 -m pytest tests/e2e/ -v -m e2e"),
    ("property suites", "python3 src/models/nls-lab/lab.py check --seed 0"),
]


def run_command(cmd, description):
    """Run a shell command"""
    print(f"\n🔧 {description}")
    print(f"Command: {cmd}")

    result = subprocess.run(cmd, shell=True, capture_output=True, text=True)

    if result.stdout:
        print("STDOUT:", result.stdout)
    if result.stderr:
        print("STDERR:", result.stderr)

    if result.returncode != 0:
        print(f"❌ Command failed with return code {result.returncode}")
        return False

    print(f"✅ {description} completed")
    return True


def main():
    """Main testing function"""
    print("🧪 NLS Laboratory Local Testing Suite")
    print("=" * 50)

    # Change to project root
    project_root = Path(__file__).parent.parent
    os.chdir(project_root)

    for number, (description, cmd) in enumerate(STAGES, start=1):
        print(f"\n📋 Step {number}: Running {description}...")
        if not run_command(cmd, f"Run {description}"):
            return False

    print("\n🎉 All local tests passed!")
    return True


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
