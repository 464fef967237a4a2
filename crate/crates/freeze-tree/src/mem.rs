//! Memory helpers for the builders: software prefetch of planned random
//! accesses, and transparent-hugepage hints for the large flat arrays.

/// Hints the cache that `v[idx]` is about to be touched. `idx` may point past
/// the initialized length but must stay within capacity; the prefetch only
/// warms the line (and its TLB entry), it never reads architecturally.
#[inline(always)]
pub(crate) fn prefetch_index<T>(v: &Vec<T>, idx: usize) {
    #[cfg(target_arch = "x86_64")]
    {
        if idx < v.capacity() {
            unsafe {
                std::arch::x86_64::_mm_prefetch(
                    v.as_ptr().add(idx) as *const i8,
                    std::arch::x86_64::_MM_HINT_T0,
                );
            }
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        let _ = (v, idx);
    }
}

/// Requests transparent hugepages for a vector's reserved buffer. Multi-MB
/// arrays with random access otherwise thrash the 4 KiB TLB. Call after
/// reserving and before first touch; advisory and harmless everywhere.
pub(crate) fn advise_huge<T>(v: &Vec<T>) {
    #[cfg(target_os = "linux")]
    {
        let bytes = v.capacity() * std::mem::size_of::<T>();
        if bytes >= 1 << 21 {
            unsafe {
                libc::madvise(v.as_ptr() as *mut libc::c_void, bytes, libc::MADV_HUGEPAGE);
            }
        }
    }
    #[cfg(not(target_os = "linux"))]
    {
        let _ = v;
    }
}
