/* zcu102 sysroot */
