import sys
from contextlib import ContextDecorator
from pathlib import Path
from typing import Any, Callable, List, Sequence

import rich.markup as rich_markup
from rich.console import Console


class AlwaysEscapeMarkupConsole(Console):
    """
    Rich console that prints strings verbatim; output paths such as `runs/[healthy]` would
    otherwise be parsed as markup tags
    """

    def print(self, *objects: Any, **kwargs: Any) -> None:
        escaped = [rich_markup.escape(obj) if isinstance(obj, str) else obj for obj in objects]
        super().print(*escaped, **kwargs)


def looks_like_list_value(token: str) -> bool:
    """
    Class labels and numbers pass; option flags and anything path-like (a separator, or an existing
    file or directory) do not
    """
    if token.startswith("-") and not _is_number(token):
        return False
    return "/" not in token and "\\" not in token and not Path(token).exists()


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def expand_list_options(
    argv: Sequence[str], list_options: Sequence[str], is_value: Callable[[str], bool] = looks_like_list_value
) -> List[str]:
    """
    Rewrite list-valued options into the repeated form typer understands:

    ```
    ["recruit", "forces/", "--order", "D", "C", "B,A"]
    -> ["recruit", "forces/", "--order", "D", "--order", "C", "--order", "B", "--order", "A"]
    ```

    Values run until the first token `is_value` rejects, so positional arguments may follow.
    """
    expanded: List[str] = []
    current_option = None
    for token in argv:
        if current_option is not None and is_value(token):
            expanded.extend(part for value in token.split(",") if value for part in (current_option, value))
            continue
        current_option = token if token in list_options else None
        if current_option is None:
            expanded.append(token)
    return expanded


class ExpandedListOptionsArgv(ContextDecorator):
    """
    Applies `expand_list_options` to `sys.argv` for the duration of the block
    """

    def __init__(self, list_options: Sequence[str]):
        self.list_options = list_options

    def __enter__(self):
        self.original_argv = sys.argv.copy()
        sys.argv = expand_list_options(sys.argv, self.list_options)

    def __exit__(self, *exc):
        sys.argv = self.original_argv
