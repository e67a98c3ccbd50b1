import sys
from pathlib import Path
from typing import List, Optional

# Add the project directory to the import path
sys.path.append(str(Path(__file__).parent))

from core.cli import run
from core.errors import LindbladFitError
from utils.helpers import print_error


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point"""
    try:
        return run(argv)
    except LindbladFitError as e:
        print_error(f"Error: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        print("\nInterrupted by user")
        return 130
    except Exception as e:
        print_error(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
