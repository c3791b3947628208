"""Process entrypoint: python -m app <command>."""
from app import create_cli

if __name__ == "__main__":
    create_cli()(prog_name="python -m app")
