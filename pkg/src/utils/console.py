import sys


def warn(message: str):
    print(f"Warning: {message}", file=sys.stderr)


def info(message: str):
    print(message, file=sys.stderr)
