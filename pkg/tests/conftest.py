import sys
from pathlib import Path

# allow cross-test imports of shared fixture helpers (tiny_inputs etc.)
sys.path.insert(0, str(Path(__file__).parent))
