# Package marker for `app.*` imports.

