/* tiny sysroot */
