"""
CLI message catalogue (English and Polish).

Only user-facing status lines go through here; reports and logs stay English.
"""

from __future__ import annotations

from typing import Dict

SUPPORTED_LANGUAGES = ("en", "pl")


class I18N:
    """Process-wide active language plus the message templates."""

    _lang: str = "en"
    _messages: Dict[str, Dict[str, str]] = {
        "experiment_not_found": {
            "en": "Experiment '{experiment}' not found. Available: {available}",
            "pl": "Eksperyment '{experiment}' nie został znaleziony. Dostępne: {available}",
        },
        "input_error": {
            "en": "Input error ({code}): {message}",
            "pl": "Błąd danych wejściowych ({code}): {message}",
        },
        "numerical_failure": {
            "en": "Numerical failure ({code}): {message}",
            "pl": "Błąd numeryczny ({code}): {message}",
        },
        "report_written": {
            "en": "Report written to {path}",
            "pl": "Raport zapisano w {path}",
        },
        "schema_written": {
            "en": "Schema written to {path}",
            "pl": "Schemat zapisano w {path}",
        },
    }

    @classmethod
    def set_language(cls, lang: str) -> None:
        """Unknown or empty codes select English."""
        norm = (lang or "").lower()
        cls._lang = norm if norm in SUPPORTED_LANGUAGES else "en"

    @classmethod
    def get_language(cls) -> str:
        return cls._lang

    @classmethod
    def translate(cls, key: str, **kwargs) -> str:
        """Format the template for ``key``; missing keys echo the key itself."""
        bundle = cls._messages.get(key, {})
        template = bundle.get(cls._lang) or bundle.get("en") or key
        try:
            return template.format(**kwargs)
        except (KeyError, IndexError):
            return template


def t(key: str, **kwargs) -> str:
    """Shortcut for I18N.translate()."""
    return I18N.translate(key, **kwargs)
