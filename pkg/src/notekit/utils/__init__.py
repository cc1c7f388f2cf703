from .validation import check_music, check_music_collection, check_tokens

__all__ = ["check_music", "check_music_collection", "check_tokens"]
