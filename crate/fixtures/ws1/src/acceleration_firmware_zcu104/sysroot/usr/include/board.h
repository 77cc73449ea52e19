/* zcu104 sysroot */
