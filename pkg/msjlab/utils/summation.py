"""Compensated summation for long mixed-sign series"""


class NeumaierSum:
    """
    Running sum with Neumaier's compensation.

    Unlike math.fsum the terms are never stored, so a series of 10^8 terms
    costs O(1) memory. The error stays at a few ulps of the result even when
    large terms of opposite sign cancel.
    """

    __slots__ = ("total", "carry")

    def __init__(self, start: float = 0.0):
        self.total = float(start)
        self.carry = 0.0

    def add(self, value: float) -> None:
        total = self.total + value
        if abs(self.total) >= abs(value):
            self.carry += (self.total - total) + value
        else:
            self.carry += (value - total) + self.total
        self.total = total

    def __iadd__(self, value: float) -> "NeumaierSum":
        self.add(value)
        return self

    @property
    def value(self) -> float:
        return self.total + self.carry

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"NeumaierSum({self.value!r})"
