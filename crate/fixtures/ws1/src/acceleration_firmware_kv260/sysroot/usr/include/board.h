/* kv260 sysroot */
