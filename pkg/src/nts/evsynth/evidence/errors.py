"""Evidence ingestion and validation errors"""

from typing import Union, Sequence


class EvidenceError(ValueError):
    """Schema, referential or structural problem in the network evidence"""

    def __init__(
        self,
        message: str,
        file: Union[str, None] = None,
        row: Union[int, None] = None,
    ) -> None:
        self.message: str = message
        self.file: Union[str, None] = file
        self.row: Union[int, None] = row
        location = ""
        if file is not None:
            location = f"{file}"
            if row is not None:
                location += f", row {row}"
            location += ": "
        super().__init__(location + message)


class DisconnectedNetworkError(EvidenceError):
    """Treatment graph has more than one connected component"""

    def __init__(self, components: Sequence[Sequence[str]]) -> None:
        self.components: list[list[str]] = [list(c) for c in components]
        listed = "; ".join("{" + ", ".join(c) + "}" for c in self.components)
        super().__init__(f"Network is disconnected, components: {listed}")
