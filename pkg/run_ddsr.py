import sys
from pathlib import Path

# Add the src directory to Python path so a plain checkout runs without installing
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

from dual_diffusion_sr.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
