"""Built-in declarations with Checked C interop types.

These play the part of the checked system headers: calls to them are
trusted to follow their itypes, so they never seed wildness.
"""

PRELUDE_NAME = "<prelude>"
PRELUDE_FILE_ID = -1

PRELUDE_SOURCE = """\
_Itype_for_any(T) void *malloc(size_t size) : itype(_Array_ptr<T>) byte_count(size);
_Itype_for_any(T) void *calloc(size_t nmemb, size_t size) : itype(_Array_ptr<T>) byte_count(nmemb * size);
_Itype_for_any(T) void free(void *pointer : itype(_Ptr<T>));
size_t strlen(const char *s : itype(_Nt_array_ptr<const char>));
_Itype_for_any(T) void bzero(void *dest : itype(_Array_ptr<T>) byte_count(n), size_t n);
"""

ALLOCATORS = frozenset({"malloc", "calloc"})
# zeroed memory may legitimately be null-terminated, so no arr lower bound
ZEROING_ALLOCATORS = frozenset({"calloc"})
